/** The classification network: stages of convolution + batch
 * normalization + ReLU, each followed by 2x2 max-pooling, then one
 * fully connected layer producing per-class logits. */

import * as tf from "@tensorflow/tfjs";
import { GrayImage, downsample, medianFilter3, standardize } from "./image";

export interface NetworkSpec {
  /** Side length of the (square) network input. */
  inputSize: number;
  /** Channel count per convolution stage. */
  channels: number[];
  kernelSize: number;
  classes: string[];
  learningRate: number;
  iterations: number;
  batchSize: number;
  momentum: number;
  seed: number;
}

export function defaultNetworkSpec(classes: string[]): NetworkSpec {
  return {
    inputSize: 32,
    channels: [4, 8, 16],
    kernelSize: 3,
    classes,
    learningRate: 0.005,
    iterations: 1440,
    batchSize: 16,
    momentum: 0.9,
    seed: 7,
  };
}

export function buildModel(spec: NetworkSpec): tf.Sequential {
  if (spec.classes.length < 2) {
    throw new Error("need at least two classes");
  }
  const model = tf.sequential();
  spec.channels.forEach((filters, i) => {
    model.add(tf.layers.conv2d({
      filters,
      kernelSize: spec.kernelSize,
      padding: "same",
      useBias: false,
      kernelInitializer: tf.initializers.glorotUniform({ seed: spec.seed + i }),
      ...(i === 0 ? { inputShape: [spec.inputSize, spec.inputSize, 1] } : {}),
    }));
    // momentum 0.9: the moving statistics settle well within the short
    // (1440-step) training budget
    model.add(tf.layers.batchNormalization({ momentum: 0.9 }));
    model.add(tf.layers.reLU());
    model.add(tf.layers.maxPooling2d({ poolSize: 2 }));
  });
  model.add(tf.layers.flatten());
  // the augmented variants of one source image differ a lot (rotation,
  // heavy noise); dropout keeps the head from keying on per-exemplar
  // detail that the transforms destroy
  model.add(tf.layers.dropout({ rate: 0.3, seed: spec.seed + 50 }));
  model.add(tf.layers.dense({
    units: spec.classes.length,
    kernelInitializer: tf.initializers.glorotUniform({ seed: spec.seed + 100 }),
  }));
  return model;
}

/** Standardized network input tensor for a batch of images, pooled
 * down to the network's input size when the source is larger. */
export function toInputTensor(images: GrayImage[],
                              inputSize: number): tf.Tensor4D {
  const n = images.length;
  const data = new Float32Array(n * inputSize * inputSize);
  images.forEach((img, i) => {
    // median prefilter: RDM class cues survive, impulse noise does not
    let im = medianFilter3(img);
    if (im.width !== inputSize) {
      if (im.width % inputSize !== 0) {
        throw new Error(
          `image side ${im.width} is not a multiple of input ${inputSize}`);
      }
      im = downsample(im, im.width / inputSize);
    }
    data.set(standardize(im), i * inputSize * inputSize);
  });
  return tf.tensor4d(data, [n, inputSize, inputSize, 1]);
}

/** Class probabilities for a batch of images. */
export function predictProba(model: tf.LayersModel, images: GrayImage[],
                             inputSize: number): number[][] {
  return tf.tidy(() => {
    const x = toInputTensor(images, inputSize);
    const probs = tf.softmax(model.apply(x, { training: false }) as tf.Tensor2D);
    return probs.arraySync() as number[][];
  });
}
