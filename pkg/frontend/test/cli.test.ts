import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { main } from "../src/cli";
import { GrayImage, readGrayPng, writeGrayPng } from "../src/image";
import { Rng } from "../src/rng";

const CLASSES = ["bus", "car", "motorcycle", "truck"];
const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "cli-"));
const srcDir = path.join(tmp, "src");
const augDir = path.join(tmp, "aug");
const modelDir = path.join(tmp, "model");

function classImage(cls: number, seed: number, side = 16): GrayImage {
  // class-dependent blob position + noise, so training has signal
  const rng = new Rng(seed);
  const data = new Uint8Array(side * side);
  for (let i = 0; i < data.length; i++) data[i] = rng.int(40);
  const cx = 3 + (cls % 2) * 8;
  const cy = 3 + Math.floor(cls / 2) * 8;
  for (let y = cy; y < cy + 4; y++) {
    for (let x = cx; x < cx + 4; x++) data[y * side + x] = 220;
  }
  return { width: side, height: side, data };
}

beforeAll(() => {
  const entries: { file: string; class: string }[] = [];
  CLASSES.forEach((cls, c) => {
    fs.mkdirSync(path.join(srcDir, cls), { recursive: true });
    for (let i = 0; i < 4; i++) {
      const file = `${cls}/${i}.png`;
      writeGrayPng(classImage(c, c * 10 + i), path.join(srcDir, file));
      entries.push({ file, class: cls });
    }
  });
  fs.writeFileSync(path.join(srcDir, "manifest.json"),
                   JSON.stringify({ classes: CLASSES, entries }));
});

afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

describe("cli", () => {
  it("augment -> train -> evaluate round trip", async () => {
    await main(["augment", "--data", srcDir, "--out", augDir,
                "--target", "16", "--seed", "3"]);
    const manifest = JSON.parse(
      fs.readFileSync(path.join(augDir, "manifest.json"), "utf-8"));
    expect(manifest.entries.length).toBe(64);
    for (const e of manifest.entries.slice(0, 4)) {
      expect(fs.existsSync(path.join(augDir, e.file))).toBe(true);
      expect(e.source).toBeDefined();
      expect(e.transform).toBeDefined();
    }
    // spot-check a written augmented image parses back
    const img = readGrayPng(path.join(augDir, manifest.entries[0].file));
    expect(img.width).toBe(16);

    await main(["train", "--data", augDir, "--out", modelDir,
                "--iterations", "120", "--batch", "8", "--input-size", "16",
                "--split", "40,16,8", "--seed", "1"]);
    for (const f of ["model.json", "weights.bin", "split.json",
                     "curves.csv", "metrics.json", "metrics.csv"]) {
      expect(fs.existsSync(path.join(modelDir, f)), f).toBe(true);
    }
    const metrics = JSON.parse(
      fs.readFileSync(path.join(modelDir, "metrics.json"), "utf-8"));
    expect(metrics.test.confusion.flat().reduce(
      (a: number, b: number) => a + b, 0)).toBe(16);
    const curves = fs.readFileSync(path.join(modelDir, "curves.csv"), "utf-8")
      .trim().split("\r\n");
    expect(curves[0]).toBe("iteration,loss,train_accuracy,validation_accuracy");
    expect(curves.length).toBeGreaterThan(1);

    await main(["evaluate", "--model", modelDir, "--data", augDir,
                "--split", "validation", "--out",
                path.join(tmp, "eval")]);
    const ev = JSON.parse(fs.readFileSync(
      path.join(tmp, "eval", "metrics.json"), "utf-8"));
    expect(ev.classes).toEqual(CLASSES);
    expect(ev.confusion.flat().reduce((a: number, b: number) => a + b, 0))
      .toBe(8);
  }, 300_000);
});
