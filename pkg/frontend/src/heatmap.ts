/** Reward-field values to RGBA pixels (blue = low, white = mid, red = high). */

export function rewardToRgba(values: number[][]): {
  width: number;
  height: number;
  pixels: Uint8ClampedArray<ArrayBuffer>;
} {
  const height = values.length;
  const width = values[0].length;
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of values) {
    for (const v of row) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  const span = hi - lo > 1e-12 ? hi - lo : 1;
  const pixels = new Uint8ClampedArray(new ArrayBuffer(width * height * 4));
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const t = (values[y][x] - lo) / span; // 0..1
      const i = 4 * (y * width + x);
      if (t < 0.5) {
        const u = t * 2;
        pixels[i] = 64 + 191 * u;
        pixels[i + 1] = 96 + 159 * u;
        pixels[i + 2] = 255;
      } else {
        const u = (t - 0.5) * 2;
        pixels[i] = 255;
        pixels[i + 1] = 255 - 159 * u;
        pixels[i + 2] = 255 - 191 * u;
      }
      pixels[i + 3] = 255;
    }
  }
  return { width, height, pixels };
}
