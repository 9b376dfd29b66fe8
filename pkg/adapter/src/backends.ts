/**
 * Denoiser backends. A backend maps (image, noise map, dims) to an
 * image of the same length; the serve loop owns the protocol, the
 * zero-map identity contract and error reporting, so backends stay
 * plain numeric functions.
 */

import { pathToFileURL } from "node:url";
import { resolve } from "node:path";

import type { Dims } from "./protocol.js";

export type Backend = (
  image: Float32Array,
  map: Float32Array,
  dims: Dims,
) => Float32Array | Promise<Float32Array>;

export const passthrough: Backend = (image) => image;

/**
 * Closed-form MAP denoiser for the prior (kappa/2)*||x - mean||^2:
 * per entry (u + kappa*s^2*mean) / (1 + kappa*s^2). Reduces to the
 * identity wherever s = 0, same arrangement as the client's builtin.
 */
export function quadratic(kappa = 1.0, mean = 0.5): Backend {
  if (!(kappa >= 0)) {
    throw new Error(`kappa: must be non-negative, got ${kappa}`);
  }
  return (image, map) => {
    const out = new Float32Array(image.length);
    for (let i = 0; i < image.length; i++) {
      const w = kappa * map[i]! * map[i]!;
      out[i] = (image[i]! + w * mean) / (1.0 + w);
    }
    return out;
  };
}

/**
 * Load a user module as a backend. The module must export a function
 * `denoise(image, map, dims)` (or default-export one) returning the
 * denoised entries; this is the hook for real pretrained models.
 */
export async function loadModelHook(modulePath: string): Promise<Backend> {
  const url = pathToFileURL(resolve(modulePath)).href;
  const mod = await import(url);
  const fn = mod.denoise ?? mod.default;
  if (typeof fn !== "function") {
    throw new Error(`${modulePath}: expected a 'denoise' function export`);
  }
  return async (image, map, dims) => {
    const out = await fn(image, map, dims);
    return out instanceof Float32Array ? out : Float32Array.from(out);
  };
}
