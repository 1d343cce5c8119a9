// Minimal MAT v5 reader: numeric arrays only, which is all the
// hyperspectral distributions contain. Handles miCOMPRESSED elements
// (zlib) and both endiannesses; cell/struct/sparse arrays are skipped.

import * as zlib from "zlib";

export interface MatArray {
  name: string;
  dims: number[];
  // Values in MAT (column-major) order, widened to float64.
  data: Float64Array;
}

const MI_INT8 = 1;
const MI_UINT8 = 2;
const MI_INT16 = 3;
const MI_UINT16 = 4;
const MI_INT32 = 5;
const MI_UINT32 = 6;
const MI_SINGLE = 7;
const MI_DOUBLE = 9;
const MI_INT64 = 12;
const MI_UINT64 = 13;
const MI_MATRIX = 14;
const MI_COMPRESSED = 15;

const NUMERIC_CLASSES = new Set([6, 7, 8, 9, 10, 11, 12, 13]);

class Reader {
  offset = 0;
  constructor(public buf: Buffer, public littleEndian: boolean) {}

  u16(at: number): number {
    return this.littleEndian ? this.buf.readUInt16LE(at) : this.buf.readUInt16BE(at);
  }

  u32(at: number): number {
    return this.littleEndian ? this.buf.readUInt32LE(at) : this.buf.readUInt32BE(at);
  }

  i32(at: number): number {
    return this.littleEndian ? this.buf.readInt32LE(at) : this.buf.readInt32BE(at);
  }
}

interface Element {
  type: number;
  payload: Buffer;
  next: number;
}

function readElement(r: Reader, at: number): Element {
  const first = r.u32(at);
  // Small data element: the upper 16 bits of the first word carry the
  // byte count and the payload lives in the tag's second word.
  const smallBytes = first >>> 16;
  if (smallBytes !== 0) {
    const type = first & 0xffff;
    return {
      type,
      payload: r.buf.subarray(at + 4, at + 4 + smallBytes),
      next: at + 8,
    };
  }
  const bytes = r.u32(at + 4);
  const payload = r.buf.subarray(at + 8, at + 8 + bytes);
  const padded = (bytes + 7) & ~7;
  return { type: first, payload, next: at + 8 + padded };
}

function decodeNumeric(type: number, payload: Buffer, le: boolean): Float64Array {
  const dv = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const read: { [t: number]: [number, (at: number) => number] } = {
    [MI_INT8]: [1, (a) => dv.getInt8(a)],
    [MI_UINT8]: [1, (a) => dv.getUint8(a)],
    [MI_INT16]: [2, (a) => dv.getInt16(a, le)],
    [MI_UINT16]: [2, (a) => dv.getUint16(a, le)],
    [MI_INT32]: [4, (a) => dv.getInt32(a, le)],
    [MI_UINT32]: [4, (a) => dv.getUint32(a, le)],
    [MI_SINGLE]: [4, (a) => dv.getFloat32(a, le)],
    [MI_DOUBLE]: [8, (a) => dv.getFloat64(a, le)],
    [MI_INT64]: [8, (a) => Number(dv.getBigInt64(a, le))],
    [MI_UINT64]: [8, (a) => Number(dv.getBigUint64(a, le))],
  };
  const entry = read[type];
  if (!entry) {
    throw new Error(`unsupported MAT numeric type ${type}`);
  }
  const [width, get] = entry;
  const n = Math.floor(payload.byteLength / width);
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = get(i * width);
  }
  return out;
}

function parseMatrix(payload: Buffer, le: boolean): MatArray | null {
  const r = new Reader(payload, le);
  let at = 0;

  const flagsEl = readElement(r, at);
  at = flagsEl.next;
  const classId = flagsEl.payload[le ? 0 : 3] & 0xff;
  if (!NUMERIC_CLASSES.has(classId)) {
    return null; // cell, struct, char, sparse: not needed here
  }

  const dimsEl = readElement(r, at);
  at = dimsEl.next;
  const dims: number[] = [];
  for (let i = 0; i + 4 <= dimsEl.payload.byteLength; i += 4) {
    dims.push(
      le ? dimsEl.payload.readInt32LE(i) : dimsEl.payload.readInt32BE(i)
    );
  }

  const nameEl = readElement(r, at);
  at = nameEl.next;
  const name = nameEl.payload.toString("latin1");

  const realEl = readElement(r, at);
  const data = decodeNumeric(realEl.type, realEl.payload, le);
  return { name, dims, data };
}

export function parseMat(buf: Buffer): MatArray[] {
  if (buf.length < 128) {
    throw new Error("not a MAT v5 file: header truncated");
  }
  const endianTag = buf.toString("latin1", 126, 128);
  let le: boolean;
  if (endianTag === "IM") {
    le = true;
  } else if (endianTag === "MI") {
    le = false;
  } else {
    throw new Error("not a MAT v5 file: bad endian indicator");
  }

  const r = new Reader(buf, le);
  const arrays: MatArray[] = [];
  let at = 128;
  while (at + 8 <= buf.length) {
    const el = readElement(r, at);
    at = el.next;
    if (el.type === MI_COMPRESSED) {
      const inflated = zlib.inflateSync(el.payload);
      const inner = readElement(new Reader(inflated, le), 0);
      if (inner.type === MI_MATRIX) {
        const arr = parseMatrix(inner.payload, le);
        if (arr) arrays.push(arr);
      }
    } else if (el.type === MI_MATRIX) {
      const arr = parseMatrix(el.payload, le);
      if (arr) arrays.push(arr);
    }
  }
  return arrays;
}

export function findVariable(
  arrays: MatArray[],
  wanted: string | undefined,
  ndim: number,
  role: string
): MatArray {
  const candidates = arrays.filter((a) => a.dims.length === ndim);
  if (wanted) {
    const hit = arrays.find((a) => a.name === wanted);
    if (!hit) {
      const names = arrays.map((a) => a.name).join(", ") || "(none)";
      throw new Error(
        `variable '${wanted}' not found for ${role}; available: ${names}`
      );
    }
    if (hit.dims.length !== ndim) {
      throw new Error(
        `variable '${wanted}' is ${hit.dims.length}-D, expected ${ndim}-D for ${role}`
      );
    }
    return hit;
  }
  if (candidates.length === 1) {
    return candidates[0];
  }
  const names = arrays.map((a) => `${a.name}(${a.dims.join("x")})`).join(", ");
  throw new Error(
    `cannot auto-pick the ${role} variable; available: ${names || "(none)"}`
  );
}
