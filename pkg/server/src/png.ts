import { PNG } from "pngjs";

export class ImageDecodeError extends Error {}

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major luminance in [0, 1] (RGB channel mean). */
  pixels: Float64Array;
}

/** Decode a base64 PNG into a grayscale plane; throws ImageDecodeError. */
export function decodeGrayPng(b64: string): GrayImage {
  let raw: Buffer;
  try {
    raw = Buffer.from(b64, "base64");
  } catch {
    throw new ImageDecodeError("invalid base64 payload");
  }
  if (raw.length === 0) {
    throw new ImageDecodeError("empty image payload");
  }
  let png: PNG;
  try {
    png = PNG.sync.read(raw);
  } catch (err) {
    throw new ImageDecodeError(`cannot decode PNG: ${(err as Error).message}`);
  }
  const { width, height, data } = png; // RGBA bytes
  if (width === 0 || height === 0) {
    throw new ImageDecodeError("zero-sized image");
  }
  const pixels = new Float64Array(width * height);
  for (let i = 0; i < width * height; i++) {
    const o = i * 4;
    pixels[i] = (data[o] + data[o + 1] + data[o + 2]) / (3 * 255);
  }
  return { width, height, pixels };
}
