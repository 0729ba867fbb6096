import { readFileSync } from "node:fs";

import { PNG } from "pngjs";

export interface DecodedImage {
  width: number;
  height: number;
  /** row-major RGB triplets */
  rgb: Uint8Array;
}

export function readPngRgb(path: string): DecodedImage {
  const png = PNG.sync.read(readFileSync(path));
  const rgb = new Uint8Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    rgb[i * 3] = png.data[i * 4];
    rgb[i * 3 + 1] = png.data[i * 4 + 1];
    rgb[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, rgb };
}

/** Grayscale mask PNG (0/255) to a row-major 0/1 grid. */
export function readPngMask(path: string): { width: number; height: number; bits: Uint8Array } {
  const png = PNG.sync.read(readFileSync(path));
  const bits = new Uint8Array(png.width * png.height);
  for (let i = 0; i < png.width * png.height; i++) {
    bits[i] = png.data[i * 4] > 0 ? 1 : 0;
  }
  return { width: png.width, height: png.height, bits };
}
