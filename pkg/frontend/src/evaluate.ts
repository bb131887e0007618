/** Accuracy, per-class accuracy and the confusion matrix for any
 * classifier exposing per-class probabilities. */

import { GrayImage } from "./image";

export interface LabeledImage {
  label: string;
  image: GrayImage;
}

/** Anything that maps a batch of images to class probabilities; the
 * trained network satisfies this via predictProba. */
export type Classifier = (images: GrayImage[]) => number[][];

export interface Evaluation {
  accuracy: number;
  perClass: Record<string, { correct: number; total: number;
                             accuracy: number }>;
  /** confusion[i][j] = count of class-i samples predicted as class j. */
  confusion: number[][];
  classes: string[];
}

export function evaluate(classify: Classifier, samples: LabeledImage[],
                         classes: string[]): Evaluation {
  if (samples.length === 0) throw new Error("no samples to evaluate");
  const index = new Map(classes.map((c, i) => [c, i]));
  for (const s of samples) {
    if (!index.has(s.label)) throw new Error(`unknown class label ${s.label}`);
  }
  const confusion = classes.map(() => classes.map(() => 0));
  const probs = classify(samples.map((s) => s.image));
  let correct = 0;
  samples.forEach((s, i) => {
    const pred = probs[i].indexOf(Math.max(...probs[i]));
    const truth = index.get(s.label)!;
    confusion[truth][pred]++;
    if (pred === truth) correct++;
  });
  const perClass: Evaluation["perClass"] = {};
  classes.forEach((c, i) => {
    const total = confusion[i].reduce((a, b) => a + b, 0);
    perClass[c] = {
      correct: confusion[i][i],
      total,
      accuracy: total > 0 ? confusion[i][i] / total : NaN,
    };
  });
  return { accuracy: correct / samples.length, perClass, confusion, classes };
}
