/** 8-bit grayscale images and the augmentation transforms that operate
 * on them. All transforms return new images and leave inputs alone. */

import * as fs from "fs";
import { PNG } from "pngjs";
import { Rng } from "./rng";

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major, one byte per pixel. */
  data: Uint8Array;
}

export function readGrayPng(path: string): GrayImage {
  const png = PNG.sync.read(fs.readFileSync(path));
  const data = new Uint8Array(png.width * png.height);
  for (let i = 0; i < data.length; i++) {
    // average the RGB channels; exported RDMs are already gray
    data[i] = Math.round(
      (png.data[4 * i] + png.data[4 * i + 1] + png.data[4 * i + 2]) / 3);
  }
  return { width: png.width, height: png.height, data };
}

export function writeGrayPng(img: GrayImage, path: string): void {
  const png = new PNG({ width: img.width, height: img.height });
  for (let i = 0; i < img.data.length; i++) {
    png.data[4 * i] = png.data[4 * i + 1] = png.data[4 * i + 2] = img.data[i];
    png.data[4 * i + 3] = 255;
  }
  fs.writeFileSync(path, PNG.sync.write(png));
}

function clampByte(x: number): number {
  return x < 0 ? 0 : x > 255 ? 255 : Math.round(x);
}

/** Shift by whole pixels; uncovered area fills with 0. */
export function translate(img: GrayImage, dx: number, dy: number): GrayImage {
  const out = new Uint8Array(img.data.length);
  for (let y = 0; y < img.height; y++) {
    const sy = y - dy;
    if (sy < 0 || sy >= img.height) continue;
    for (let x = 0; x < img.width; x++) {
      const sx = x - dx;
      if (sx < 0 || sx >= img.width) continue;
      out[y * img.width + x] = img.data[sy * img.width + sx];
    }
  }
  return { width: img.width, height: img.height, data: out };
}

/** Rotate about the image center with bilinear sampling; fill with 0. */
export function rotate(img: GrayImage, degrees: number): GrayImage {
  const rad = (degrees * Math.PI) / 180;
  const cos = Math.cos(rad);
  const sin = Math.sin(rad);
  const cx = (img.width - 1) / 2;
  const cy = (img.height - 1) / 2;
  const out = new Uint8Array(img.data.length);
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      // inverse-map the output pixel into the source
      const sx = cos * (x - cx) + sin * (y - cy) + cx;
      const sy = -sin * (x - cx) + cos * (y - cy) + cy;
      if (sx < 0 || sy < 0 || sx > img.width - 1 || sy > img.height - 1) {
        continue;
      }
      const x0 = Math.floor(sx);
      const y0 = Math.floor(sy);
      const x1 = Math.min(x0 + 1, img.width - 1);
      const y1 = Math.min(y0 + 1, img.height - 1);
      const fx = sx - x0;
      const fy = sy - y0;
      const i00 = img.data[y0 * img.width + x0];
      const i10 = img.data[y0 * img.width + x1];
      const i01 = img.data[y1 * img.width + x0];
      const i11 = img.data[y1 * img.width + x1];
      out[y * img.width + x] = clampByte(
        i00 * (1 - fx) * (1 - fy) + i10 * fx * (1 - fy) +
        i01 * (1 - fx) * fy + i11 * fx * fy);
    }
  }
  return { width: img.width, height: img.height, data: out };
}

export function addGaussianNoise(img: GrayImage, sigma: number,
                                 rng: Rng): GrayImage {
  const out = new Uint8Array(img.data.length);
  for (let i = 0; i < out.length; i++) {
    out[i] = clampByte(img.data[i] + sigma * rng.gaussian());
  }
  return { width: img.width, height: img.height, data: out };
}

/** Set a `density` fraction of pixels to black or white (half each). */
export function addSaltPepper(img: GrayImage, density: number,
                              rng: Rng): GrayImage {
  const out = Uint8Array.from(img.data);
  for (let i = 0; i < out.length; i++) {
    if (rng.next() < density) {
      out[i] = rng.next() < 0.5 ? 0 : 255;
    }
  }
  return { width: img.width, height: img.height, data: out };
}

/** 3x3 median filter (edge pixels use the truncated window); removes
 * salt-and-pepper impulses while keeping edges. */
export function medianFilter3(img: GrayImage): GrayImage {
  const out = new Uint8Array(img.data.length);
  const win: number[] = [];
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      win.length = 0;
      for (let dy = -1; dy <= 1; dy++) {
        const yy = y + dy;
        if (yy < 0 || yy >= img.height) continue;
        for (let dx = -1; dx <= 1; dx++) {
          const xx = x + dx;
          if (xx < 0 || xx >= img.width) continue;
          win.push(img.data[yy * img.width + xx]);
        }
      }
      win.sort((a, b) => a - b);
      out[y * img.width + x] = win[win.length >> 1];
    }
  }
  return { width: img.width, height: img.height, data: out };
}

/** Average-pool by an integer factor (image sides must divide evenly). */
export function downsample(img: GrayImage, factor: number): GrayImage {
  if (img.width % factor !== 0 || img.height % factor !== 0) {
    throw new Error(
      `image ${img.width}x${img.height} not divisible by ${factor}`);
  }
  const w = img.width / factor;
  const h = img.height / factor;
  const out = new Uint8Array(w * h);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      let sum = 0;
      for (let yy = 0; yy < factor; yy++) {
        for (let xx = 0; xx < factor; xx++) {
          sum += img.data[(y * factor + yy) * img.width + x * factor + xx];
        }
      }
      out[y * w + x] = Math.round(sum / (factor * factor));
    }
  }
  return { width: w, height: h, data: out };
}

/** Per-image standardization to zero mean, unit variance. */
export function standardize(img: GrayImage): Float32Array {
  const n = img.data.length;
  let mean = 0;
  for (let i = 0; i < n; i++) mean += img.data[i];
  mean /= n;
  let varSum = 0;
  for (let i = 0; i < n; i++) varSum += (img.data[i] - mean) ** 2;
  const std = Math.sqrt(varSum / n) || 1;
  const out = new Float32Array(n);
  for (let i = 0; i < n; i++) out[i] = (img.data[i] - mean) / std;
  return out;
}
