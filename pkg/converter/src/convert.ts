// Conversion pipeline: MAT cube + MAT ground truth -> scene.hsic,
// labels.hsilbl, manifest.json in the layout the classifier consumes.

import * as fs from "fs";
import * as path from "path";
import { MatArray, findVariable, parseMat } from "./mat";
import { Manifest, writeCube, writeLabels, writeManifest } from "./formats";
import { PRESETS, Preset } from "./presets";

export interface ConversionJob {
  cubePath: string;
  labelsPath: string;
  labelsTestPath?: string; // separate test ground truth (Houston style)
  cubeVar?: string;
  labelsVar?: string;
  preset: string; // indian_pines | pavia_university | houston2013 | custom
  outDir: string;
}

export interface ConversionResult {
  height: number;
  width: number;
  bands: number;
  histogram: number[]; // labeled pixels per class
  scenePath: string;
  labelsPath: string;
  manifestPath: string;
}

function loadMat(filePath: string): MatArray[] {
  return parseMat(fs.readFileSync(filePath));
}

// MAT arrays are column-major; the cube file is row-major BIP.
function toRowMajorBip(cube: MatArray): Float32Array {
  const [h, w, k] = cube.dims;
  const out = new Float32Array(h * w * k);
  for (let band = 0; band < k; band++) {
    const base = band * h * w;
    for (let col = 0; col < w; col++) {
      const colBase = base + col * h;
      for (let row = 0; row < h; row++) {
        out[(row * w + col) * k + band] = Math.fround(
          cube.data[colBase + row]
        );
      }
    }
  }
  return out;
}

function toRowMajorLabels(gt: MatArray): Uint16Array {
  const [h, w] = gt.dims;
  const out = new Uint16Array(h * w);
  for (let col = 0; col < w; col++) {
    for (let row = 0; row < h; row++) {
      out[row * w + col] = gt.data[col * h + row];
    }
  }
  return out;
}

function labeledIndices(labels: Uint16Array): number[] {
  const out: number[] = [];
  for (let i = 0; i < labels.length; i++) {
    if (labels[i] > 0) out.push(i);
  }
  return out;
}

function histogram(labels: Uint16Array, classes: number): number[] {
  const hist = new Array(classes).fill(0);
  for (let i = 0; i < labels.length; i++) {
    if (labels[i] > 0 && labels[i] <= classes) hist[labels[i] - 1]++;
  }
  return hist;
}

function customPreset(h: number, w: number, k: number, classes: number): Preset {
  const names: string[] = [];
  const palette: number[][] = [];
  for (let c = 0; c < classes; c++) {
    names.push(`Class ${c + 1}`);
    // deterministic distinct colors on a hue wheel
    const hue = (c * 360) / Math.max(classes, 1);
    palette.push(hsvToRgb(hue, 0.65, 0.9));
  }
  return {
    name: "custom",
    height: h,
    width: w,
    bands: k,
    classNames: names,
    palette,
    trainCounts: new Array(classes).fill(0),
    testCounts: new Array(classes).fill(0),
  };
}

function hsvToRgb(h: number, s: number, v: number): number[] {
  const c = v * s;
  const x = c * (1 - Math.abs(((h / 60) % 2) - 1));
  const m = v - c;
  const sector = Math.floor(h / 60) % 6;
  const table = [
    [c, x, 0],
    [x, c, 0],
    [0, c, x],
    [0, x, c],
    [x, 0, c],
    [c, 0, x],
  ][sector];
  return table.map((u) => Math.round((u + m) * 255));
}

export function convert(job: ConversionJob): ConversionResult {
  const cube = findVariable(loadMat(job.cubePath), job.cubeVar, 3, "cube");
  const gt = findVariable(loadMat(job.labelsPath), job.labelsVar, 2, "labels");
  const [h, w, k] = cube.dims;
  if (gt.dims[0] !== h || gt.dims[1] !== w) {
    throw new Error(
      `label raster ${gt.dims.join("x")} does not match cube ${h}x${w}`
    );
  }

  const labels = toRowMajorLabels(gt);
  let trainIndices: number[] | undefined;
  let testIndices: number[] | undefined;
  if (job.labelsTestPath) {
    const gtTest = findVariable(
      loadMat(job.labelsTestPath),
      job.labelsVar,
      2,
      "test labels"
    );
    if (gtTest.dims[0] !== h || gtTest.dims[1] !== w) {
      throw new Error(
        `test label raster ${gtTest.dims.join("x")} does not match cube ${h}x${w}`
      );
    }
    const testLabels = toRowMajorLabels(gtTest);
    trainIndices = labeledIndices(labels);
    testIndices = labeledIndices(testLabels);
    for (const i of testIndices) {
      if (labels[i] === 0) labels[i] = testLabels[i];
    }
  }

  let preset: Preset;
  if (job.preset === "custom") {
    let classes = 0;
    for (let i = 0; i < labels.length; i++) {
      if (labels[i] > classes) classes = labels[i];
    }
    preset = customPreset(h, w, k, classes);
  } else {
    const named = PRESETS[job.preset];
    if (!named) {
      const known = Object.keys(PRESETS).join(", ");
      throw new Error(`unknown preset '${job.preset}'; known: ${known}, custom`);
    }
    if (named.height !== h || named.width !== w || named.bands !== k) {
      throw new Error(
        `cube ${h}x${w}x${k} does not match preset ${named.name} ` +
          `(${named.height}x${named.width}x${named.bands})`
      );
    }
    preset = named;
  }

  fs.mkdirSync(job.outDir, { recursive: true });
  const scenePath = path.join(job.outDir, "scene.hsic");
  const labelsPath = path.join(job.outDir, "labels.hsilbl");
  const manifestPath = path.join(job.outDir, "manifest.json");

  writeCube(scenePath, h, w, k, toRowMajorBip(cube));
  writeLabels(labelsPath, h, w, labels);

  const manifest: Manifest = {
    name: preset.name,
    class_names: preset.classNames,
    palette: preset.palette,
    train_counts: preset.trainCounts,
    test_counts: preset.testCounts,
  };
  if (trainIndices && testIndices) {
    manifest.train_indices = trainIndices;
    manifest.test_indices = testIndices;
  }
  writeManifest(manifestPath, manifest);

  return {
    height: h,
    width: w,
    bands: k,
    histogram: histogram(labels, preset.classNames.length),
    scenePath,
    labelsPath,
    manifestPath,
  };
}
