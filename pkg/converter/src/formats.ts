/**
 * Writers for the two binary scene formats consumed by the classifier.
 *
 * Cube files: magic "HSC1", then three little-endian u32 fields holding
 * width (columns), height (rows) and band count, then height*width*bands
 * float32 samples laid out row-major with the band index fastest.
 *
 * Label files: magic "HSG1", then u32 width and height, then height*width
 * little-endian u16 class ids in row-major order.
 */

export const CUBE_MAGIC = "HSC1";
export const LABEL_MAGIC = "HSG1";

export class RangeError_ extends Error {}

/** Serialize a row-major, band-fastest f32 cube. */
export function writeCube(
  rows: number, cols: number, bands: number, values: Float32Array,
): Buffer {
  const count = rows * cols * bands;
  if (values.length !== count) {
    throw new RangeError_(
      `cube payload holds ${values.length} values, geometry needs ${count}`);
  }
  const buf = Buffer.alloc(16 + 4 * count);
  buf.write(CUBE_MAGIC, 0, "latin1");
  buf.writeUInt32LE(cols, 4);
  buf.writeUInt32LE(rows, 8);
  buf.writeUInt32LE(bands, 12);
  for (let i = 0; i < count; i++) {
    buf.writeFloatLE(values[i], 16 + 4 * i);
  }
  return buf;
}

/** Serialize a row-major u16 label raster. */
export function writeLabels(
  rows: number, cols: number, values: Uint16Array,
): Buffer {
  const count = rows * cols;
  if (values.length !== count) {
    throw new RangeError_(
      `label payload holds ${values.length} values, geometry needs ${count}`);
  }
  const buf = Buffer.alloc(12 + 2 * count);
  buf.write(LABEL_MAGIC, 0, "latin1");
  buf.writeUInt32LE(cols, 4);
  buf.writeUInt32LE(rows, 8);
  for (let i = 0; i < count; i++) {
    buf.writeUInt16LE(values[i], 12 + 2 * i);
  }
  return buf;
}
