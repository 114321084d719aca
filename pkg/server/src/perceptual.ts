/**
 * Perceptual distance: mean absolute luminance difference over a three-level
 * box-filtered pyramid. Bounded in [0, 1] by construction, zero for
 * identical inputs, and deterministic.
 */

import type { GrayImage } from "./png.js";

const LEVEL_WEIGHTS = [0.5, 0.3, 0.2];

export class DimensionMismatchError extends Error {}

function halve(img: GrayImage): GrayImage {
  const width = Math.max(1, Math.floor(img.width / 2));
  const height = Math.max(1, Math.floor(img.height / 2));
  const pixels = new Float64Array(width * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const sy = Math.min(2 * y + 1, img.height - 1);
      const sx = Math.min(2 * x + 1, img.width - 1);
      pixels[y * width + x] =
        (img.pixels[2 * y * img.width + 2 * x] +
          img.pixels[2 * y * img.width + sx] +
          img.pixels[sy * img.width + 2 * x] +
          img.pixels[sy * img.width + sx]) / 4;
    }
  }
  return { width, height, pixels };
}

function meanAbsDiff(a: GrayImage, b: GrayImage): number {
  let total = 0;
  for (let i = 0; i < a.pixels.length; i++) {
    total += Math.abs(a.pixels[i] - b.pixels[i]);
  }
  return total / a.pixels.length;
}

export function perceptualDistance(a: GrayImage, b: GrayImage): number {
  if (a.width !== b.width || a.height !== b.height) {
    throw new DimensionMismatchError(
      `image sizes differ: ${a.width}x${a.height} vs ${b.width}x${b.height}`,
    );
  }
  let distance = 0;
  let la = a;
  let lb = b;
  for (const weight of LEVEL_WEIGHTS) {
    distance += weight * meanAbsDiff(la, lb);
    la = halve(la);
    lb = halve(lb);
  }
  return Math.min(1, Math.max(0, distance));
}
