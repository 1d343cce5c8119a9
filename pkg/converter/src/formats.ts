// Writers for the binary scene formats and the JSON manifest.

import * as fs from "fs";

export interface Manifest {
  name: string;
  class_names: string[];
  palette: number[][];
  train_counts: number[];
  test_counts: number[];
  train_indices?: number[];
  test_indices?: number[];
}

// 8-byte magic, u32 H W K, float32 row-major band-interleaved-by-pixel.
export function writeCube(
  path: string,
  height: number,
  width: number,
  bands: number,
  values: Float32Array
): void {
  if (values.length !== height * width * bands) {
    throw new Error(
      `cube size mismatch: ${values.length} values for ${height}x${width}x${bands}`
    );
  }
  const header = Buffer.alloc(20);
  header.write("HSICUBE1", 0, "latin1");
  header.writeUInt32LE(height, 8);
  header.writeUInt32LE(width, 12);
  header.writeUInt32LE(bands, 16);
  const body = Buffer.alloc(values.length * 4);
  for (let i = 0; i < values.length; i++) {
    body.writeFloatLE(values[i], i * 4);
  }
  fs.writeFileSync(path, Buffer.concat([header, body]));
}

// 8-byte magic (NUL padded), u32 H W, u16 labels (0 = unlabeled).
export function writeLabels(
  path: string,
  height: number,
  width: number,
  labels: Uint16Array
): void {
  if (labels.length !== height * width) {
    throw new Error(
      `label size mismatch: ${labels.length} values for ${height}x${width}`
    );
  }
  const header = Buffer.alloc(16);
  header.write("HSILBL1\0", 0, "latin1");
  header.writeUInt32LE(height, 8);
  header.writeUInt32LE(width, 12);
  const body = Buffer.alloc(labels.length * 2);
  for (let i = 0; i < labels.length; i++) {
    body.writeUInt16LE(labels[i], i * 2);
  }
  fs.writeFileSync(path, Buffer.concat([header, body]));
}

export function writeManifest(path: string, manifest: Manifest): void {
  fs.writeFileSync(path, JSON.stringify(manifest, null, 2) + "\n");
}
