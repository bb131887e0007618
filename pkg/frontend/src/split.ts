/** Disjoint train/test/validation split over a shuffled index order. */

import { Rng } from "./rng";

export interface SplitSpec {
  train: number;
  test: number;
  validation: number;
  seed: number;
}

export const DEFAULT_SPLIT: SplitSpec = {
  train: 600,
  test: 320,
  validation: 200,
  seed: 3,
};

export interface Split {
  train: number[];
  test: number[];
  validation: number[];
}

export function makeSplit(n: number, spec: SplitSpec): Split {
  const total = spec.train + spec.test + spec.validation;
  if (total !== n) {
    throw new Error(`split ${spec.train}/${spec.test}/${spec.validation} ` +
                    `sums to ${total}, dataset has ${n}`);
  }
  if (spec.train <= 0 || spec.test <= 0 || spec.validation <= 0) {
    throw new Error("all split counts must be positive");
  }
  const order = new Rng(spec.seed).shuffle([...Array(n).keys()]);
  return {
    train: order.slice(0, spec.train),
    test: order.slice(spec.train, spec.train + spec.test),
    validation: order.slice(spec.train + spec.test),
  };
}
