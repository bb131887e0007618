/** File-based model persistence (model.json + weights.bin) built on
 * tfjs's in-memory IO handlers, so no native filesystem handler is
 * needed. */

import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";
import { NetworkSpec } from "./model";

export async function saveModel(model: tf.LayersModel, spec: NetworkSpec,
                                dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(tf.io.withSaveHandler(async (artifacts) => {
    fs.writeFileSync(path.join(dir, "model.json"), JSON.stringify({
      modelTopology: artifacts.modelTopology,
      weightSpecs: artifacts.weightSpecs,
      network: spec,
    }, null, 2));
    const weights = artifacts.weightData as ArrayBuffer;
    fs.writeFileSync(path.join(dir, "weights.bin"), Buffer.from(weights));
    return { modelArtifactsInfo: {
      dateSaved: new Date(),
      modelTopologyType: "JSON",
    } };
  }));
}

export async function loadModel(dir: string):
    Promise<{ model: tf.LayersModel; spec: NetworkSpec }> {
  const meta = JSON.parse(
    fs.readFileSync(path.join(dir, "model.json"), "utf-8"));
  const buf = fs.readFileSync(path.join(dir, "weights.bin"));
  const weightData = buf.buffer.slice(
    buf.byteOffset, buf.byteOffset + buf.byteLength);
  const model = await tf.loadLayersModel(tf.io.fromMemory({
    modelTopology: meta.modelTopology,
    weightSpecs: meta.weightSpecs,
    weightData,
  }));
  return { model, spec: meta.network as NetworkSpec };
}
