/**
 * Minimal reader for MATLAB Level 5 (.mat) containers.
 *
 * Covers what the released hyperspectral benchmark files actually use:
 * numeric N-D arrays (double, single, and the integer classes), the small
 * data element encoding, zlib-compressed elements, type-compressed real
 * parts (a double-class array whose payload is stored in a narrower
 * integer type), and both byte orders. Cells, structs, char arrays,
 * sparse and complex matrices are listed but not decoded; v4 files and
 * v7.3 (HDF5) containers are rejected with a pointed message.
 */

import { inflateSync } from "node:zlib";

export class MatFormatError extends Error {}

// Data element type codes.
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

// Array class codes (subset we decode).
const MX_DOUBLE = 6;
const MX_UINT64 = 15;

const CLASS_NAMES: Record<number, string> = {
  1: "cell", 2: "struct", 3: "object", 4: "char", 5: "sparse",
  6: "double", 7: "single", 8: "int8", 9: "uint8", 10: "int16",
  11: "uint16", 12: "int32", 13: "uint32", 14: "int64", 15: "uint64",
};

const HDF5_MAGIC = Buffer.from([0x89, 0x48, 0x44, 0x46, 0x0d, 0x0a, 0x1a, 0x0a]);

export interface MatArray {
  name: string;
  dims: number[];
  className: string;
  /** Column-major element values; null when the class is not decoded. */
  values: Float64Array | null;
}

interface Tag {
  type: number;
  size: number;
  dataOffset: number;
  nextOffset: number;
}

function readTag(view: DataView, offset: number, le: boolean): Tag {
  if (offset + 8 > view.byteLength) {
    throw new MatFormatError(
      `element tag at byte ${offset} runs past the end of the file`);
  }
  const word = view.getUint32(offset, le);
  if (word >>> 16 !== 0) {
    // Small data element: size lives in the upper half of the type word
    // and the payload in the remaining 4 tag bytes.
    return {
      type: word & 0xffff,
      size: word >>> 16,
      dataOffset: offset + 4,
      nextOffset: offset + 8,
    };
  }
  const size = view.getUint32(offset + 4, le);
  const padded = (size + 7) & ~7;
  return {
    type: word,
    size,
    dataOffset: offset + 8,
    nextOffset: offset + 8 + padded,
  };
}

function checkedSlice(view: DataView, tag: Tag, what: string): void {
  if (tag.dataOffset + tag.size > view.byteLength) {
    throw new MatFormatError(
      `${what} claims ${tag.size} bytes at offset ${tag.dataOffset} but ` +
      `the element holds only ${view.byteLength - tag.dataOffset}`);
  }
}

/** Decode a numeric element payload into f64, regardless of stored type. */
function decodeNumeric(
  view: DataView, tag: Tag, le: boolean, what: string,
): Float64Array {
  checkedSlice(view, tag, what);
  const off = tag.dataOffset;
  const read: Record<number, [number, (i: number) => number]> = {
    [MI_INT8]: [1, (i) => view.getInt8(off + i)],
    [MI_UINT8]: [1, (i) => view.getUint8(off + i)],
    [MI_INT16]: [2, (i) => view.getInt16(off + i * 2, le)],
    [MI_UINT16]: [2, (i) => view.getUint16(off + i * 2, le)],
    [MI_INT32]: [4, (i) => view.getInt32(off + i * 4, le)],
    [MI_UINT32]: [4, (i) => view.getUint32(off + i * 4, le)],
    [MI_SINGLE]: [4, (i) => view.getFloat32(off + i * 4, le)],
    [MI_DOUBLE]: [8, (i) => view.getFloat64(off + i * 8, le)],
    [MI_INT64]: [8, (i) => bigToNumber(view.getBigInt64(off + i * 8, le), what)],
    [MI_UINT64]: [8, (i) => bigToNumber(view.getBigUint64(off + i * 8, le), what)],
  };
  const entry = read[tag.type];
  if (!entry) {
    throw new MatFormatError(`${what}: unsupported numeric type ${tag.type}`);
  }
  const [width, get] = entry;
  if (tag.size % width !== 0) {
    throw new MatFormatError(
      `${what}: payload of ${tag.size} bytes is not a multiple of ${width}`);
  }
  const n = tag.size / width;
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = get(i);
  }
  return out;
}

function bigToNumber(v: bigint, what: string): number {
  if (v > BigInt(Number.MAX_SAFE_INTEGER) || v < -BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new MatFormatError(`${what}: 64-bit value ${v} exceeds exact f64 range`);
  }
  return Number(v);
}

/** Parse one miMATRIX element body into a MatArray. */
function parseMatrix(view: DataView, le: boolean): MatArray {
  // Array flags subelement: class byte plus complex/global/logical bits.
  const flagsTag = readTag(view, 0, le);
  if (flagsTag.type !== MI_UINT32 || flagsTag.size < 8) {
    throw new MatFormatError("matrix element does not start with array flags");
  }
  checkedSlice(view, flagsTag, "array flags");
  const flagsWord = view.getUint32(flagsTag.dataOffset, le);
  const classId = flagsWord & 0xff;
  const complex = (flagsWord & 0x0800) !== 0;
  const className = CLASS_NAMES[classId] ?? `class ${classId}`;

  const dimsTag = readTag(view, flagsTag.nextOffset, le);
  if (dimsTag.type !== MI_INT32) {
    throw new MatFormatError("matrix element lacks a dimensions subelement");
  }
  checkedSlice(view, dimsTag, "dimensions");
  const dims: number[] = [];
  for (let i = 0; i < dimsTag.size / 4; i++) {
    dims.push(view.getInt32(dimsTag.dataOffset + i * 4, le));
  }

  const nameTag = readTag(view, dimsTag.nextOffset, le);
  if (nameTag.type !== MI_INT8) {
    throw new MatFormatError("matrix element lacks a name subelement");
  }
  checkedSlice(view, nameTag, "array name");
  const nameBytes = new Uint8Array(
    view.buffer, view.byteOffset + nameTag.dataOffset, nameTag.size);
  const name = Buffer.from(nameBytes).toString("latin1");

  const decodable =
    classId >= MX_DOUBLE && classId <= MX_UINT64 && !complex;
  if (!decodable) {
    return { name, dims, className: complex ? `complex ${className}` : className, values: null };
  }

  const realTag = readTag(view, nameTag.nextOffset, le);
  const values = decodeNumeric(view, realTag, le, `array "${name}"`);
  const count = dims.reduce((a, b) => a * b, 1);
  if (values.length !== count) {
    throw new MatFormatError(
      `array "${name}": ${values.length} stored values for dimensions ` +
      `${dims.join("x")} (${count} elements)`);
  }
  return { name, dims, className, values };
}

function viewOf(buf: Buffer): DataView {
  return new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
}

/**
 * Read every top-level array in a v5 .mat file.
 *
 * Arrays of undecoded classes come back with values null so callers can
 * name them in error messages.
 */
export function readMatFile(data: Buffer): MatArray[] {
  if (data.length >= 8 && data.subarray(0, 8).equals(HDF5_MAGIC)) {
    throw new MatFormatError(
      "this is a v7.3 (HDF5) container; re-save it without -v7.3, only " +
      "v5 .mat files are supported");
  }
  if (data.length < 128) {
    throw new MatFormatError(
      `file is ${data.length} bytes, shorter than a v5 .mat header`);
  }
  const endian = data.toString("latin1", 126, 128);
  let le: boolean;
  if (endian === "IM") {
    le = true;
  } else if (endian === "MI") {
    le = false;
  } else {
    throw new MatFormatError(
      "no v5 byte-order marker at byte 126; this is not a v5 .mat file " +
      "(v4 files predate the marker and are not supported)");
  }
  const version = le ? data.readUInt16LE(124) : data.readUInt16BE(124);
  if (version !== 0x0100) {
    throw new MatFormatError(
      `unexpected .mat version 0x${version.toString(16)}, expected 0x100`);
  }

  const view = viewOf(data);
  const arrays: MatArray[] = [];
  let offset = 128;
  while (offset + 8 <= data.length) {
    const tag = readTag(view, offset, le);
    if (tag.type === MI_COMPRESSED) {
      checkedSlice(view, tag, "compressed element");
      let inflated: Buffer;
      try {
        inflated = inflateSync(
          data.subarray(tag.dataOffset, tag.dataOffset + tag.size));
      } catch (err) {
        throw new MatFormatError(
          `compressed element at byte ${offset} does not inflate: ${err}`);
      }
      const innerView = viewOf(inflated);
      const inner = readTag(innerView, 0, le);
      if (inner.type === MI_MATRIX) {
        checkedSlice(innerView, inner, "matrix element");
        arrays.push(parseMatrix(
          viewOf(inflated.subarray(inner.dataOffset,
                                   inner.dataOffset + inner.size)), le));
      }
    } else if (tag.type === MI_MATRIX) {
      checkedSlice(view, tag, "matrix element");
      arrays.push(parseMatrix(
        viewOf(data.subarray(tag.dataOffset, tag.dataOffset + tag.size)), le));
    }
    // Any other top-level element type is skipped wholesale.
    if (tag.nextOffset <= offset) {
      throw new MatFormatError(`element at byte ${offset} has zero size`);
    }
    offset = tag.nextOffset;
  }
  return arrays;
}
