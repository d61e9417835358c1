/** Turn a raw pointer stroke into a fixed-horizon demonstration. */

export type Point = [number, number];

function dist(a: Point, b: Point): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1]);
}

/**
 * Resample a polyline to exactly `count` points, evenly spaced by arc
 * length along the original stroke. Degenerate strokes (single point or
 * zero length) repeat the point.
 */
export function resampleByArcLength(stroke: Point[], count: number): Point[] {
  if (count < 2) throw new Error(`need at least 2 samples, got ${count}`);
  if (stroke.length === 0) throw new Error("empty stroke");
  const cumulative = [0];
  for (let i = 1; i < stroke.length; i++) {
    cumulative.push(cumulative[i - 1] + dist(stroke[i - 1], stroke[i]));
  }
  const total = cumulative[cumulative.length - 1];
  if (total === 0) {
    return Array.from({ length: count }, () => [...stroke[0]] as Point);
  }
  const out: Point[] = [];
  let seg = 0;
  for (let k = 0; k < count; k++) {
    const target = (total * k) / (count - 1);
    while (seg < stroke.length - 2 && cumulative[seg + 1] < target) seg++;
    const span = cumulative[seg + 1] - cumulative[seg];
    const t = span > 0 ? (target - cumulative[seg]) / span : 0;
    out.push([
      stroke[seg][0] + t * (stroke[seg + 1][0] - stroke[seg][0]),
      stroke[seg][1] + t * (stroke[seg + 1][1] - stroke[seg][1]),
    ]);
  }
  return out;
}

/** Pin the first and last waypoints to the session start/goal exactly. */
export function snapEndpoints(
  states: Point[],
  start: Point,
  goal: Point | null,
): Point[] {
  const out = states.map((p) => [...p] as Point);
  out[0] = [...start];
  if (goal !== null) out[out.length - 1] = [...goal];
  return out;
}

export function clampAllToBox(
  states: Point[],
  lo: Point,
  hi: Point,
): Point[] {
  return states.map((p) => [
    Math.min(hi[0], Math.max(lo[0], p[0])),
    Math.min(hi[1], Math.max(lo[1], p[1])),
  ]);
}

/** Stroke -> submission-ready demonstration states (H+1 of them). */
export function strokeToDemonstration(
  stroke: Point[],
  horizon: number,
  start: Point,
  goal: Point | null,
  lo: Point,
  hi: Point,
): Point[] {
  const resampled = resampleByArcLength(stroke, horizon + 1);
  return snapEndpoints(clampAllToBox(resampled, lo, hi), start, goal);
}
