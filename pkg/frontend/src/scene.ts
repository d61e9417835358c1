/** Canvas layer rendering: heat-map, landmarks, trajectories, strokes. */

import type { Viewport } from "./viewport.js";
import type { Point } from "./resample.js";

export interface SceneState {
  heatmap: HTMLCanvasElement | null; // pre-rendered offscreen layer
  landmarks: Record<string, number[]>;
  trajectory: Point[] | null; // the robot's current plan
  stroke: Point[] | null; // in-progress demonstration stroke (world coords)
  snippet: { window: [number, number]; points: Point[] } | null;
  queryPair: { a: Point[]; b: Point[] } | null;
  selection: [number, number] | null; // correction window being selected
}

function drawPolyline(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  points: Point[],
  color: string,
  width: number,
  dashed = false,
) {
  if (points.length < 2) return;
  ctx.save();
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.setLineDash(dashed ? [6, 4] : []);
  ctx.beginPath();
  const [x0, y0] = vp.toScreen(points[0][0], points[0][1]);
  ctx.moveTo(x0, y0);
  for (let i = 1; i < points.length; i++) {
    const [x, y] = vp.toScreen(points[i][0], points[i][1]);
    ctx.lineTo(x, y);
  }
  ctx.stroke();
  ctx.restore();
}

function drawWaypoints(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  points: Point[],
  color: string,
  radius = 3,
) {
  ctx.save();
  ctx.fillStyle = color;
  for (const p of points) {
    const [x, y] = vp.toScreen(p[0], p[1]);
    ctx.beginPath();
    ctx.arc(x, y, radius, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.restore();
}

export function renderScene(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  scene: SceneState,
) {
  ctx.clearRect(0, 0, vp.width, vp.height);
  if (scene.heatmap) {
    const [left, top] = vp.toScreen(vp.box.lo[0], vp.box.hi[1]);
    const [right, bottom] = vp.toScreen(vp.box.hi[0], vp.box.lo[1]);
    ctx.drawImage(scene.heatmap, left, top, right - left, bottom - top);
  }
  // workspace frame
  {
    const [l, t] = vp.toScreen(vp.box.lo[0], vp.box.hi[1]);
    const [r, b] = vp.toScreen(vp.box.hi[0], vp.box.lo[1]);
    ctx.strokeStyle = "#555";
    ctx.lineWidth = 1;
    ctx.strokeRect(l, t, r - l, b - t);
  }
  for (const [name, coords] of Object.entries(scene.landmarks)) {
    const [x, y] = vp.toScreen(coords[0], coords[1]);
    ctx.fillStyle = name === "goal" ? "#2a9d2a" : name === "start" ? "#333" : "#b8860b";
    ctx.beginPath();
    ctx.arc(x, y, 6, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#222";
    ctx.font = "12px sans-serif";
    ctx.fillText(name, x + 8, y - 8);
  }
  if (scene.queryPair) {
    drawPolyline(ctx, vp, scene.queryPair.a, "#e63946", 2.5);
    drawPolyline(ctx, vp, scene.queryPair.b, "#457b9d", 2.5);
  }
  if (scene.trajectory) {
    drawPolyline(ctx, vp, scene.trajectory, "#111", 2);
    drawWaypoints(ctx, vp, scene.trajectory, "#111");
    if (scene.selection) {
      const [s, e] = scene.selection;
      drawWaypoints(ctx, vp, scene.trajectory.slice(s, e + 1), "#ff8c00", 5);
    }
  }
  if (scene.snippet) {
    drawPolyline(ctx, vp, scene.snippet.points, "#ff8c00", 2.5, true);
    drawWaypoints(ctx, vp, scene.snippet.points, "#ff8c00", 4);
  }
  if (scene.stroke) {
    drawPolyline(ctx, vp, scene.stroke, "#6a0dad", 2, true);
  }
}
