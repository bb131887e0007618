/** Loading the simulator's exported image dataset.
 *
 * The only coupling to the simulator is its on-disk contract: a
 * directory of per-class PNG files plus a manifest.json listing
 * { file, class } entries.
 */

import * as fs from "fs";
import * as path from "path";
import { GrayImage, readGrayPng } from "./image";

export interface Sample {
  /** Path relative to the dataset root. */
  file: string;
  label: string;
  image: GrayImage;
}

export interface Dataset {
  classes: string[];
  samples: Sample[];
  imageSize: number;
}

interface ManifestEntry {
  file: string;
  class: string;
}

export function loadDataset(dir: string): Dataset {
  const manifestPath = path.join(dir, "manifest.json");
  if (!fs.existsSync(manifestPath)) {
    throw new Error(`no manifest.json in ${dir}`);
  }
  const manifest = JSON.parse(fs.readFileSync(manifestPath, "utf-8"));
  const entries: ManifestEntry[] = manifest.entries;
  if (!Array.isArray(entries) || entries.length === 0) {
    throw new Error(`${manifestPath} has no entries`);
  }
  const classes: string[] = manifest.classes ??
    [...new Set(entries.map((e) => e.class))].sort();
  const samples = entries.map((e) => ({
    file: e.file,
    label: e.class,
    image: readGrayPng(path.join(dir, e.file)),
  }));
  const size = samples[0].image.width;
  return { classes, samples, imageSize: size };
}

/** Group sample indices by label; errors on labels outside `classes`. */
export function byClass(samples: { label: string }[],
                        classes: string[]): Map<string, number[]> {
  const groups = new Map<string, number[]>(classes.map((c) => [c, []]));
  samples.forEach((s, i) => {
    const g = groups.get(s.label);
    if (!g) throw new Error(`unknown class label ${s.label}`);
    g.push(i);
  });
  return groups;
}
