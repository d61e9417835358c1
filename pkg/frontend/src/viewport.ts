/** Bijective mapping between the session workspace box and the canvas. */

export interface Box {
  lo: [number, number];
  hi: [number, number];
}

export class Viewport {
  readonly scale: number;
  readonly offsetX: number;
  readonly offsetY: number;

  constructor(
    readonly box: Box,
    readonly width: number,
    readonly height: number,
    readonly margin = 16,
  ) {
    const spanX = box.hi[0] - box.lo[0];
    const spanY = box.hi[1] - box.lo[1];
    const usableW = width - 2 * margin;
    const usableH = height - 2 * margin;
    this.scale = Math.min(usableW / spanX, usableH / spanY);
    // center the box inside the canvas
    this.offsetX = margin + (usableW - spanX * this.scale) / 2;
    this.offsetY = margin + (usableH - spanY * this.scale) / 2;
  }

  /** World coordinates to canvas pixels (y flipped: world up is screen up). */
  toScreen(wx: number, wy: number): [number, number] {
    const sx = this.offsetX + (wx - this.box.lo[0]) * this.scale;
    const sy =
      this.height - this.offsetY - (wy - this.box.lo[1]) * this.scale;
    return [sx, sy];
  }

  toWorld(sx: number, sy: number): [number, number] {
    const wx = this.box.lo[0] + (sx - this.offsetX) / this.scale;
    const wy =
      this.box.lo[1] + (this.height - this.offsetY - sy) / this.scale;
    return [wx, wy];
  }

  clampToBox(p: [number, number]): [number, number] {
    return [
      Math.min(this.box.hi[0], Math.max(this.box.lo[0], p[0])),
      Math.min(this.box.hi[1], Math.max(this.box.lo[1], p[1])),
    ];
  }
}
