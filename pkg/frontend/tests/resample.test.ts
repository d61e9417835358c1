import { describe, expect, it } from "vitest";
import {
  clampAllToBox,
  resampleByArcLength,
  snapEndpoints,
  strokeToDemonstration,
  type Point,
} from "../src/resample.js";

function onSegment(p: Point, a: Point, b: Point): boolean {
  const cross =
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
  if (Math.abs(cross) > 1e-9) return false;
  const dot =
    (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]);
  const len2 = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2;
  return dot >= -1e-9 && dot <= len2 + 1e-9;
}

describe("arc-length resampling", () => {
  it("turns a 3-point stroke into exactly H+1 waypoints on the polyline", () => {
    const stroke: Point[] = [
      [0, 0],
      [0.5, 0.5],
      [1, 0],
    ];
    const out = resampleByArcLength(stroke, 21);
    expect(out).toHaveLength(21);
    for (const p of out) {
      expect(
        onSegment(p, stroke[0], stroke[1]) || onSegment(p, stroke[1], stroke[2]),
      ).toBe(true);
    }
    expect(out[0]).toEqual([0, 0]);
    expect(out[20][0]).toBeCloseTo(1, 9);
  });

  it("spaces samples evenly by arc length", () => {
    const stroke: Point[] = [
      [0, 0],
      [1, 0],
    ];
    const out = resampleByArcLength(stroke, 5);
    expect(out.map((p) => p[0])).toEqual([0, 0.25, 0.5, 0.75, 1]);
  });

  it("keeps uneven input spacing from skewing the output", () => {
    const stroke: Point[] = [
      [0, 0],
      [0.9, 0],
      [0.91, 0],
      [1, 0],
    ];
    const out = resampleByArcLength(stroke, 11);
    for (let i = 1; i < out.length; i++) {
      expect(out[i][0] - out[i - 1][0]).toBeCloseTo(0.1, 9);
    }
  });

  it("handles degenerate strokes by repeating the point", () => {
    const out = resampleByArcLength([[0.3, 0.4]], 4);
    expect(out).toEqual([
      [0.3, 0.4],
      [0.3, 0.4],
      [0.3, 0.4],
      [0.3, 0.4],
    ]);
  });

  it("snaps submitted endpoints to the session start and goal", () => {
    const states: Point[] = [
      [0.1, 0.1],
      [0.5, 0.5],
      [0.8, 0.8],
    ];
    const snapped = snapEndpoints(states, [0, 0], [1, 1]);
    expect(snapped[0]).toEqual([0, 0]);
    expect(snapped[2]).toEqual([1, 1]);
    expect(snapped[1]).toEqual([0.5, 0.5]);
  });

  it("produces H+1 in-box waypoints with snapped endpoints end to end", () => {
    const stroke: Point[] = [
      [-0.2, 0.7],
      [0.4, 1.4],
      [1.3, 0.5],
    ];
    const out = strokeToDemonstration(
      stroke,
      20,
      [0.05, 0.6],
      [0.95, 0.55],
      [0, 0],
      [1, 1],
    );
    expect(out).toHaveLength(21);
    expect(out[0]).toEqual([0.05, 0.6]);
    expect(out[20]).toEqual([0.95, 0.55]);
    for (const p of out) {
      expect(p[0]).toBeGreaterThanOrEqual(0);
      expect(p[0]).toBeLessThanOrEqual(1);
      expect(p[1]).toBeGreaterThanOrEqual(0);
      expect(p[1]).toBeLessThanOrEqual(1);
    }
  });

  it("clamps to the box", () => {
    expect(clampAllToBox([[2, -1]], [0, 0], [1, 1])).toEqual([[1, 0]]);
  });
});
