/** Dataset expansion: translation, rotation, Gaussian noise and
 * salt-and-pepper noise, each recorded in the output's provenance. */

import {
  GrayImage, addGaussianNoise, addSaltPepper, rotate, translate,
} from "./image";
import { Rng } from "./rng";
import { Sample, byClass } from "./dataset";

export interface AugmentationPolicy {
  /** Max |shift| in pixels for the translation transform. */
  maxShiftPx: number;
  /** Max |angle| in degrees for the rotation transform. */
  maxRotateDeg: number;
  /** Gaussian noise sigma in gray levels (0 disables). */
  gaussianSigma: number;
  /** Fraction of pixels forced to black/white (0 disables). */
  saltPepperDensity: number;
  /** Output count per class, originals included. */
  targetPerClass: number;
}

export const DEFAULT_POLICY: AugmentationPolicy = {
  maxShiftPx: 2,
  maxRotateDeg: 10,
  gaussianSigma: 8,
  saltPepperDensity: 0.05,
  targetPerClass: 280,
};

export interface AugmentedSample {
  label: string;
  image: GrayImage;
  /** Source file this image was derived from. */
  source: string;
  /** Human-readable transform description ("identity" for originals). */
  transform: string;
}

function validatePolicy(policy: AugmentationPolicy,
                        groups: Map<string, number[]>): void {
  if (policy.saltPepperDensity < 0 || policy.saltPepperDensity >= 1) {
    throw new Error(
      `salt-pepper density ${policy.saltPepperDensity} outside [0, 1)`);
  }
  for (const [cls, idx] of groups) {
    if (idx.length === 0) {
      throw new Error(`class ${cls} has no source images`);
    }
    if (policy.targetPerClass < idx.length) {
      throw new Error(
        `target ${policy.targetPerClass}/class below source count ` +
        `${idx.length} for ${cls}`);
    }
  }
}

type Transform = (img: GrayImage, rng: Rng) => [GrayImage, string];

function enabledTransforms(policy: AugmentationPolicy): Transform[] {
  const out: Transform[] = [];
  if (policy.maxShiftPx > 0) {
    out.push((img, rng) => {
      const dx = rng.int(2 * policy.maxShiftPx + 1) - policy.maxShiftPx;
      const dy = rng.int(2 * policy.maxShiftPx + 1) - policy.maxShiftPx;
      return [translate(img, dx, dy), `translate(${dx},${dy})`];
    });
  }
  if (policy.maxRotateDeg > 0) {
    out.push((img, rng) => {
      const deg = rng.uniform(-policy.maxRotateDeg, policy.maxRotateDeg);
      return [rotate(img, deg), `rotate(${deg.toFixed(2)})`];
    });
  }
  if (policy.gaussianSigma > 0) {
    out.push((img, rng) => [
      addGaussianNoise(img, policy.gaussianSigma, rng),
      `gaussian(${policy.gaussianSigma})`,
    ]);
  }
  if (policy.saltPepperDensity > 0) {
    out.push((img, rng) => [
      addSaltPepper(img, policy.saltPepperDensity, rng),
      `salt_pepper(${policy.saltPepperDensity})`,
    ]);
  }
  return out;
}

/** Expand to policy.targetPerClass images per class. Originals pass
 * through unchanged; the remainder each applies one randomly drawn
 * transform to a cyclically chosen source image. Deterministic for a
 * fixed seed regardless of class ordering. */
export function augment(samples: Sample[], classes: string[],
                        policy: AugmentationPolicy,
                        seed: number): AugmentedSample[] {
  const groups = byClass(samples, classes);
  validatePolicy(policy, groups);
  const transforms = enabledTransforms(policy);
  const out: AugmentedSample[] = [];
  [...groups.keys()].sort().forEach((cls, clsIndex) => {
    const idx = groups.get(cls)!;
    const rng = new Rng((seed * 0x9e3779b9 + clsIndex) >>> 0);
    for (const i of idx) {
      out.push({ label: cls, image: samples[i].image,
                 source: samples[i].file, transform: "identity" });
    }
    for (let k = 0; k < policy.targetPerClass - idx.length; k++) {
      const src = samples[idx[k % idx.length]];
      if (transforms.length === 0) {
        out.push({ label: cls, image: src.image, source: src.file,
                   transform: "identity" });
        continue;
      }
      const t = transforms[rng.int(transforms.length)];
      const [image, desc] = t(src.image, rng);
      out.push({ label: cls, image, source: src.file, transform: desc });
    }
  });
  return out;
}
