/** Seeded minibatch training with momentum SGD and periodic
 * train/validation accuracy snapshots. */

import * as tf from "@tensorflow/tfjs";
import { GrayImage } from "./image";
import { NetworkSpec, buildModel, predictProba, toInputTensor } from "./model";
import { Rng } from "./rng";

export interface LabeledImage {
  label: string;
  image: GrayImage;
}

export interface CurvePoint {
  iteration: number;
  loss: number;
  trainAccuracy: number;
  validationAccuracy: number | null;
}

export interface TrainResult {
  model: tf.LayersModel;
  curves: CurvePoint[];
  spec: NetworkSpec;
}

function labelIndices(samples: LabeledImage[], classes: string[]): number[] {
  return samples.map((s) => {
    const k = classes.indexOf(s.label);
    if (k < 0) throw new Error(`unknown class label ${s.label}`);
    return k;
  });
}

export function train(trainSet: LabeledImage[],
                      spec: NetworkSpec,
                      validationSet: LabeledImage[] = [],
                      snapshotEvery = 144): TrainResult {
  for (const cls of spec.classes) {
    if (!trainSet.some((s) => s.label === cls)) {
      throw new Error(`class ${cls} absent from the training split`);
    }
  }
  const labels = labelIndices(trainSet, spec.classes);
  const x = toInputTensor(trainSet.map((s) => s.image), spec.inputSize);
  const y = tf.oneHot(tf.tensor1d(labels, "int32"), spec.classes.length);
  const model = buildModel(spec);
  const optimizer = tf.train.momentum(spec.learningRate, spec.momentum);
  const rng = new Rng(spec.seed ^ 0x5f3759df);
  const curves: CurvePoint[] = [];

  let order: number[] = [];
  const nextBatch = (): number[] => {
    if (order.length < spec.batchSize) {
      order = rng.shuffle([...Array(trainSet.length).keys()]);
    }
    return order.splice(0, spec.batchSize);
  };

  const accuracyOn = (set: LabeledImage[]): number => {
    if (set.length === 0) return NaN;
    const probs = predictProba(model, set.map((s) => s.image), spec.inputSize);
    let correct = 0;
    set.forEach((s, i) => {
      const pred = probs[i].indexOf(Math.max(...probs[i]));
      if (spec.classes[pred] === s.label) correct++;
    });
    return correct / set.length;
  };

  for (let it = 1; it <= spec.iterations; it++) {
    const idx = nextBatch();
    const loss = tf.tidy(() => {
      const bx = tf.gather(x, idx);
      const by = tf.gather(y, idx);
      const value = optimizer.minimize(
        () => tf.losses.softmaxCrossEntropy(
          by, model.apply(bx, { training: true }) as tf.Tensor2D),
        true);
      return value!.dataSync()[0];
    });
    if (it % snapshotEvery === 0 || it === spec.iterations) {
      curves.push({
        iteration: it,
        loss,
        trainAccuracy: accuracyOn(trainSet),
        validationAccuracy:
          validationSet.length > 0 ? accuracyOn(validationSet) : null,
      });
    }
  }
  x.dispose();
  y.dispose();
  return { model, curves, spec };
}
