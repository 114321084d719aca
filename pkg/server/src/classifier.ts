/**
 * Deterministic zero-shot style classifier.
 *
 * Images embed as mean-centered 8x8 pooled luminance; label prompts embed
 * through a seeded hash expansion. Class logits are temperature-scaled
 * cosine similarities, softmaxed into probabilities. Equal prompts share an
 * embedding, so they always split probability mass evenly.
 */

import type { GrayImage } from "./png.js";

const GRID = 8;
const FEATURES = GRID * GRID;
const TEMPERATURE = 10.0;

const MASK64 = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;

function splitmix64(state: bigint): [bigint, bigint] {
  state = (state + GAMMA) & MASK64;
  let z = state;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return [state, (z ^ (z >> 31n)) & MASK64];
}

function fnv1a64(text: string): bigint {
  let hash = 0xcbf29ce484222325n;
  for (const byte of Buffer.from(text, "utf8")) {
    hash = ((hash ^ BigInt(byte)) * 0x100000001b3n) & MASK64;
  }
  return hash;
}

function unitUniform(raw: bigint): number {
  return Number(raw >> 11n) / 2 ** 53;
}

export function labelEmbedding(label: string, seed: bigint): Float64Array {
  const vec = new Float64Array(FEATURES);
  let state = (fnv1a64(label) ^ ((seed * GAMMA) & MASK64)) & MASK64;
  let mean = 0;
  for (let i = 0; i < FEATURES; i++) {
    let out: bigint;
    [state, out] = splitmix64(state);
    vec[i] = 2 * unitUniform(out) - 1;
    mean += vec[i];
  }
  mean /= FEATURES;
  let norm = 0;
  for (let i = 0; i < FEATURES; i++) {
    vec[i] -= mean;
    norm += vec[i] * vec[i];
  }
  norm = Math.sqrt(norm);
  if (norm > 0) {
    for (let i = 0; i < FEATURES; i++) vec[i] /= norm;
  }
  return vec;
}

export function imageEmbedding(img: GrayImage): Float64Array {
  const vec = new Float64Array(FEATURES);
  // Mean pooling over an 8x8 partition with integer block edges.
  for (let gy = 0; gy < GRID; gy++) {
    const y0 = Math.floor((gy * img.height) / GRID);
    const y1 = Math.max(y0 + 1, Math.floor(((gy + 1) * img.height) / GRID));
    for (let gx = 0; gx < GRID; gx++) {
      const x0 = Math.floor((gx * img.width) / GRID);
      const x1 = Math.max(x0 + 1, Math.floor(((gx + 1) * img.width) / GRID));
      let total = 0;
      for (let y = y0; y < y1; y++) {
        for (let x = x0; x < x1; x++) total += img.pixels[y * img.width + x];
      }
      vec[gy * GRID + gx] = total / ((y1 - y0) * (x1 - x0));
    }
  }
  let mean = 0;
  for (let i = 0; i < FEATURES; i++) mean += vec[i];
  mean /= FEATURES;
  let norm = 0;
  for (let i = 0; i < FEATURES; i++) {
    vec[i] -= mean;
    norm += vec[i] * vec[i];
  }
  norm = Math.sqrt(norm);
  if (norm > 0) {
    for (let i = 0; i < FEATURES; i++) vec[i] /= norm;
  }
  return vec;
}

export function classify(img: GrayImage, labels: string[], seed: bigint): number[] {
  const image = imageEmbedding(img);
  const logits = labels.map((label) => {
    const text = labelEmbedding(label, seed);
    let dot = 0;
    for (let i = 0; i < FEATURES; i++) dot += image[i] * text[i];
    return TEMPERATURE * dot;
  });
  const peak = Math.max(...logits);
  const exps = logits.map((l) => Math.exp(l - peak));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((e) => e / total);
}
