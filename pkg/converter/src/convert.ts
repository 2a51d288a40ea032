/**
 * Turn MATLAB arrays into classifier scene files.
 *
 * MATLAB stores arrays column-major with dimensions reported as
 * rows x cols x bands. The output formats are row-major with the band
 * index fastest, so conversion is a reindexing pass plus a cast: cubes
 * go to float32, label rasters to uint16 after an integrality and range
 * check. Running the same conversion twice produces identical bytes.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { MatArray, readMatFile } from "./mat";
import { writeCube, writeLabels } from "./formats";

export class ConversionError extends Error {}

export interface Job {
  input: string;
  output: string;
  kind: "cube" | "labels";
  /** Variable to convert; may be omitted when the file holds one array. */
  variable?: string;
  /** Expected dimensions as MATLAB reports them (rows, cols[, bands]). */
  expect?: number[];
}

export interface Summary {
  variable: string;
  /** Dimensions as stored in the file (rows, cols[, bands]). */
  dims: number[];
  bytesWritten: number;
  lines: string[];
}

function describe(arrays: MatArray[]): string {
  if (arrays.length === 0) {
    return "the file holds no arrays";
  }
  const names = arrays
    .map((a) => `"${a.name}" (${a.className} ${a.dims.join("x")})`)
    .join(", ");
  return `the file holds ${names}`;
}

/** Pick the array to convert, demanding a name when the file is ambiguous. */
export function selectArray(arrays: MatArray[], variable?: string): MatArray {
  if (variable !== undefined) {
    const hit = arrays.find((a) => a.name === variable);
    if (!hit) {
      throw new ConversionError(
        `no variable named "${variable}"; ${describe(arrays)}`);
    }
    if (!hit.values) {
      throw new ConversionError(
        `variable "${variable}" is a ${hit.className} array, which cannot ` +
        "be converted");
    }
    return hit;
  }
  const numeric = arrays.filter((a) => a.values);
  if (numeric.length === 1) {
    return numeric[0];
  }
  if (numeric.length === 0) {
    throw new ConversionError(`no numeric arrays to convert; ${describe(arrays)}`);
  }
  throw new ConversionError(
    `pass --var to choose one: ${describe(arrays)}`);
}

function checkExpect(dims: number[], expect: number[] | undefined): void {
  if (!expect) {
    return;
  }
  const got = dims.join("x");
  const want = expect.join("x");
  if (got !== want) {
    throw new ConversionError(`expected dimensions ${want}, file holds ${got}`);
  }
}

/** Reindex a column-major cube to row-major band-fastest f32. */
export function cubeValues(arr: MatArray): Float32Array {
  const [n, m, d] = arr.dims;
  const src = arr.values as Float64Array;
  const out = new Float32Array(n * m * d);
  for (let b = 0; b < d; b++) {
    const plane = b * n * m;
    for (let c = 0; c < m; c++) {
      const column = plane + c * n;
      for (let r = 0; r < n; r++) {
        out[(r * m + c) * d + b] = src[column + r];
      }
    }
  }
  return out;
}

/** Reindex a column-major label raster to row-major u16, validating values. */
export function labelValues(arr: MatArray): Uint16Array {
  const [n, m] = arr.dims;
  const src = arr.values as Float64Array;
  const out = new Uint16Array(n * m);
  for (let c = 0; c < m; c++) {
    for (let r = 0; r < n; r++) {
      const v = src[c * n + r];
      if (!Number.isInteger(v)) {
        throw new ConversionError(
          `label at row ${r}, column ${c} is ${v}, not an integer`);
      }
      if (v < 0 || v > 65535) {
        throw new ConversionError(
          `label at row ${r}, column ${c} is ${v}, outside 0..65535`);
      }
      out[r * m + c] = v;
    }
  }
  return out;
}

function convertCube(arr: MatArray, expect?: number[]): { buf: Buffer; lines: string[] } {
  if (arr.dims.length !== 3) {
    throw new ConversionError(
      `cube conversion needs a 3-D array, "${arr.name}" is ` +
      `${arr.dims.join("x")}`);
  }
  checkExpect(arr.dims, expect);
  const [n, m, d] = arr.dims;
  const values = cubeValues(arr);
  let lo = Infinity;
  let hi = -Infinity;
  for (let i = 0; i < values.length; i++) {
    const v = values[i];
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const buf = writeCube(n, m, d, values);
  return {
    buf,
    lines: [
      `cube "${arr.name}": ${n} rows x ${m} cols x ${d} bands`,
      `values ${lo} .. ${hi}`,
    ],
  };
}

function convertLabels(arr: MatArray, expect?: number[]): { buf: Buffer; lines: string[] } {
  if (arr.dims.length !== 2) {
    throw new ConversionError(
      `label conversion needs a 2-D array, "${arr.name}" is ` +
      `${arr.dims.join("x")}`);
  }
  checkExpect(arr.dims, expect);
  const [n, m] = arr.dims;
  const values = labelValues(arr);
  let hi = 0;
  let nonzero = 0;
  for (let i = 0; i < values.length; i++) {
    if (values[i] > hi) hi = values[i];
    if (values[i] !== 0) nonzero++;
  }
  const buf = writeLabels(n, m, values);
  return {
    buf,
    lines: [
      `labels "${arr.name}": ${n} rows x ${m} cols`,
      `classes 1..${hi}, ${nonzero} labeled pixels`,
    ],
  };
}

/** Run one conversion job end to end. */
export function runJob(job: Job): Summary {
  let data: Buffer;
  try {
    data = readFileSync(job.input);
  } catch (err) {
    throw new ConversionError(`cannot read ${job.input}: ${err}`);
  }
  const arrays = readMatFile(data);
  const arr = selectArray(arrays, job.variable);
  const { buf, lines } =
    job.kind === "cube" ? convertCube(arr, job.expect)
                        : convertLabels(arr, job.expect);
  writeFileSync(job.output, buf);
  return {
    variable: arr.name,
    dims: arr.dims,
    bytesWritten: buf.length,
    lines: [...lines, `wrote ${buf.length} bytes to ${job.output}`],
  };
}
