#!/usr/bin/env node
/** Command-line driver: augment an exported image dataset, train the
 * classifier, and evaluate a saved model. Couples to the simulator
 * only through its dataset directory (PNGs + manifest.json). */

import * as fs from "fs";
import * as path from "path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { AugmentationPolicy, DEFAULT_POLICY, augment } from "./augment";
import { loadDataset } from "./dataset";
import { Evaluation, evaluate } from "./evaluate";
import { writeGrayPng } from "./image";
import { loadModel, saveModel } from "./io";
import { defaultNetworkSpec, predictProba } from "./model";
import { DEFAULT_SPLIT, makeSplit } from "./split";
import { train } from "./train";

function writeJson(file: string, obj: unknown): void {
  fs.mkdirSync(path.dirname(file), { recursive: true });
  fs.writeFileSync(file, JSON.stringify(obj, null, 2) + "\n");
}

function writeCsv(file: string, header: string[], rows: unknown[][]): void {
  fs.mkdirSync(path.dirname(file), { recursive: true });
  const lines = [header, ...rows].map((r) => r.join(","));
  fs.writeFileSync(file, lines.join("\r\n") + "\r\n");
}

function evaluationRows(ev: Evaluation): unknown[][] {
  const rows: unknown[][] = [["overall", "", "", ev.accuracy.toFixed(4)]];
  for (const cls of ev.classes) {
    const p = ev.perClass[cls];
    rows.push([cls, p.correct, p.total, p.accuracy.toFixed(4)]);
  }
  return rows;
}

function cmdAugment(argv: Record<string, unknown>): void {
  const data = loadDataset(String(argv.data));
  const policy: AugmentationPolicy = {
    maxShiftPx: Number(argv.shift),
    maxRotateDeg: Number(argv.rotate),
    gaussianSigma: Number(argv.gaussian),
    saltPepperDensity: Number(argv.saltPepper),
    targetPerClass: Number(argv.target),
  };
  const out = String(argv.out);
  const augmented = augment(data.samples, data.classes, policy,
                            Number(argv.seed));
  const counts = new Map<string, number>();
  const entries = augmented.map((a) => {
    const n = counts.get(a.label) ?? 0;
    counts.set(a.label, n + 1);
    const file = `${a.label}/${String(n).padStart(4, "0")}.png`;
    fs.mkdirSync(path.join(out, a.label), { recursive: true });
    writeGrayPng(a.image, path.join(out, file));
    return { file, class: a.label, source: a.source, transform: a.transform };
  });
  writeJson(path.join(out, "manifest.json"), {
    classes: data.classes,
    image_size: data.imageSize,
    policy,
    seed: Number(argv.seed),
    entries,
  });
  console.log(`wrote ${entries.length} images under ${out}`);
}

async function cmdTrain(argv: Record<string, unknown>): Promise<void> {
  const data = loadDataset(String(argv.data));
  const [trainN, testN, valN] = String(argv.split).split(",").map(Number);
  const splitSpec = { train: trainN, test: testN, validation: valN,
                      seed: Number(argv.splitSeed) };
  const split = makeSplit(data.samples.length, splitSpec);
  const spec = {
    ...defaultNetworkSpec(data.classes),
    inputSize: Number(argv.inputSize),
    learningRate: Number(argv.lr),
    iterations: Number(argv.iterations),
    batchSize: Number(argv.batch),
    seed: Number(argv.seed),
  };
  const pick = (idx: number[]) => idx.map((i) => data.samples[i]);
  const result = train(pick(split.train), spec, pick(split.validation));
  const out = String(argv.out);
  await saveModel(result.model, spec, out);
  writeJson(path.join(out, "split.json"), { spec: splitSpec, ...split });
  writeCsv(path.join(out, "curves.csv"),
           ["iteration", "loss", "train_accuracy", "validation_accuracy"],
           result.curves.map((c) => [c.iteration, c.loss.toFixed(6),
                                     c.trainAccuracy.toFixed(4),
                                     c.validationAccuracy?.toFixed(4) ?? ""]));
  const classify = (imgs: Parameters<typeof predictProba>[1]) =>
    predictProba(result.model, imgs, spec.inputSize);
  const testEval = evaluate(classify, pick(split.test), data.classes);
  writeCsv(path.join(out, "metrics.csv"),
           ["class", "correct", "total", "accuracy"],
           evaluationRows(testEval));
  writeJson(path.join(out, "metrics.json"), {
    test: testEval,
    curves: result.curves,
    network: spec,
  });
  console.log(`test accuracy ${(testEval.accuracy * 100).toFixed(2)}% ` +
              `(${testEval.confusion.flat().reduce((a, b) => a + b, 0)} images)`);
}

async function cmdEvaluate(argv: Record<string, unknown>): Promise<void> {
  const { model, spec } = await loadModel(String(argv.model));
  const data = loadDataset(String(argv.data));
  let samples = data.samples;
  const which = String(argv.split);
  if (which !== "all") {
    const splitFile = path.join(String(argv.model), "split.json");
    if (!fs.existsSync(splitFile)) {
      throw new Error(`--split ${which} needs ${splitFile}`);
    }
    const split = JSON.parse(fs.readFileSync(splitFile, "utf-8"));
    const idx: number[] = split[which];
    if (!idx) throw new Error(`unknown split ${which}`);
    samples = idx.map((i: number) => data.samples[i]);
  }
  const ev = evaluate(
    (imgs) => predictProba(model, imgs, spec.inputSize), samples,
    spec.classes);
  if (argv.out) {
    writeCsv(path.join(String(argv.out), "metrics.csv"),
             ["class", "correct", "total", "accuracy"], evaluationRows(ev));
    writeJson(path.join(String(argv.out), "metrics.json"), ev);
  }
  console.log(JSON.stringify(ev, null, 2));
}

export function main(args: string[]): Promise<unknown> {
  return yargs(args)
    .command("augment", "expand a dataset with image transforms", (y) => y
      .option("data", { type: "string", demandOption: true })
      .option("out", { type: "string", demandOption: true })
      .option("target", { type: "number",
                          default: DEFAULT_POLICY.targetPerClass })
      .option("shift", { type: "number", default: DEFAULT_POLICY.maxShiftPx })
      .option("rotate", { type: "number",
                          default: DEFAULT_POLICY.maxRotateDeg })
      .option("gaussian", { type: "number",
                            default: DEFAULT_POLICY.gaussianSigma })
      .option("salt-pepper", { type: "number",
                               default: DEFAULT_POLICY.saltPepperDensity })
      .option("seed", { type: "number", default: 17 }),
      (argv) => cmdAugment(argv))
    .command("train", "train the classifier on an augmented dataset", (y) => y
      .option("data", { type: "string", demandOption: true })
      .option("out", { type: "string", demandOption: true })
      .option("lr", { type: "number", default: 0.005 })
      .option("iterations", { type: "number", default: 1440 })
      .option("batch", { type: "number", default: 16 })
      .option("input-size", { type: "number", default: 32 })
      .option("seed", { type: "number", default: 7 })
      .option("split", { type: "string",
                         default: `${DEFAULT_SPLIT.train},` +
                                  `${DEFAULT_SPLIT.test},` +
                                  `${DEFAULT_SPLIT.validation}` })
      .option("split-seed", { type: "number", default: DEFAULT_SPLIT.seed }),
      (argv) => cmdTrain(argv))
    .command("evaluate", "evaluate a saved model", (y) => y
      .option("model", { type: "string", demandOption: true })
      .option("data", { type: "string", demandOption: true })
      .option("split", { type: "string", default: "test",
                         choices: ["train", "test", "validation", "all"] })
      .option("out", { type: "string" }),
      (argv) => cmdEvaluate(argv))
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(msg ?? err?.message);
      process.exit(2);
    })
    .parseAsync();
}

if (require.main === module) {
  main(hideBin(process.argv)).catch((err) => {
    console.error(err.message);
    process.exit(1);
  });
}
