/** Smooth client-side falloff for correction drags.
 *
 * Dragging one waypoint moves its neighbors with a cosine-shaped decay so
 * the snippet stays visually smooth; the window's first and last points
 * never move (they must stay continuous with the surrounding trajectory).
 * The server receives the result as-is and never re-smooths it.
 */

import type { Point } from "./resample.js";

export function applyDrag(
  snippet: Point[],
  dragIndex: number,
  delta: Point,
  radius = 3,
): Point[] {
  const n = snippet.length;
  if (dragIndex <= 0 || dragIndex >= n - 1) {
    throw new Error("window endpoints are fixed; drag an interior waypoint");
  }
  const out = snippet.map((p) => [...p] as Point);
  for (let i = 1; i < n - 1; i++) {
    const d = Math.abs(i - dragIndex);
    if (d > radius) continue;
    const w = 0.5 * (1 + Math.cos((Math.PI * d) / radius));
    out[i][0] += w * delta[0];
    out[i][1] += w * delta[1];
  }
  out[dragIndex] = [
    snippet[dragIndex][0] + delta[0],
    snippet[dragIndex][1] + delta[1],
  ];
  return out;
}

/** Window selection on the current trajectory; inclusive indices. */
export function validWindow(start: number, end: number, horizon: number): boolean {
  return (
    Number.isInteger(start) &&
    Number.isInteger(end) &&
    start >= 0 &&
    start < end &&
    end <= horizon &&
    end - start + 1 >= 3
  );
}
