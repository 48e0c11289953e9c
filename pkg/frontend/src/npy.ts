/**
 * Minimal NumPy .npy (format version 1.0) reader/writer for 2-D
 * little-endian float32/float64 arrays in C order — enough to exchange
 * feature matrices and solver plans with the Python side.
 */
import * as fs from "fs";

const NPY_MAGIC = "\x93NUMPY";

export class NpyFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NpyFormatError";
  }
}

export type NpyDtype = "<f4" | "<f8";

export interface NpyArray {
  readonly dtype: NpyDtype;
  readonly shape: [number, number];
  readonly data: Float32Array | Float64Array;
}

const LITTLE_ENDIAN = new Uint8Array(new Uint16Array([1]).buffer)[0] === 1;

function assertLittleEndianHost(): void {
  if (!LITTLE_ENDIAN) {
    throw new NpyFormatError("big-endian hosts are not supported");
  }
}

export function decodeNpy(buf: Buffer, name = "<buffer>"): NpyArray {
  assertLittleEndianHost();
  if (buf.length < 10 || buf.subarray(0, 6).toString("latin1") !== NPY_MAGIC) {
    throw new NpyFormatError(`${name}: not an npy file`);
  }
  const major = buf[6];
  if (major !== 1) {
    throw new NpyFormatError(`${name}: unsupported npy version ${major}.${buf[7]}`);
  }
  const headerLen = buf.readUInt16LE(8);
  const header = buf.subarray(10, 10 + headerLen).toString("latin1");
  const descr = /'descr':\s*'([^']+)'/.exec(header)?.[1];
  const fortran = /'fortran_order':\s*(True|False)/.exec(header)?.[1];
  const shapeText = /'shape':\s*\(([^)]*)\)/.exec(header)?.[1];
  if (!descr || !fortran || shapeText === undefined) {
    throw new NpyFormatError(`${name}: malformed header ${JSON.stringify(header)}`);
  }
  if (descr !== "<f4" && descr !== "<f8") {
    throw new NpyFormatError(`${name}: unsupported dtype ${descr}`);
  }
  if (fortran !== "False") {
    throw new NpyFormatError(`${name}: only C-order arrays are supported`);
  }
  const dims = shapeText.split(",").map((s) => s.trim()).filter((s) => s.length > 0).map(Number);
  if (dims.length !== 2 || dims.some((d) => !Number.isInteger(d) || d < 0)) {
    throw new NpyFormatError(`${name}: expected a 2-D shape, got (${shapeText})`);
  }
  const [rows, cols] = dims as [number, number];
  const itemSize = descr === "<f4" ? 4 : 8;
  const start = 10 + headerLen;
  const expected = start + itemSize * rows * cols;
  if (buf.length !== expected) {
    throw new NpyFormatError(`${name}: payload is ${buf.length - start} bytes, expected ${expected - start}`);
  }
  const payload = new Uint8Array(buf.subarray(start, expected));
  const data =
    descr === "<f4"
      ? new Float32Array(payload.buffer, 0, rows * cols)
      : new Float64Array(payload.buffer, 0, rows * cols);
  return { dtype: descr, shape: [rows, cols], data };
}

export function encodeNpy(arr: NpyArray): Buffer {
  assertLittleEndianHost();
  const [rows, cols] = arr.shape;
  if (arr.data.length !== rows * cols) {
    throw new NpyFormatError(`payload length ${arr.data.length} does not match (${rows}, ${cols})`);
  }
  const dict = `{'descr': '${arr.dtype}', 'fortran_order': False, 'shape': (${rows}, ${cols}), }`;
  // magic(6) + version(2) + headerlen(2) + dict + padding + '\n', total % 64 == 0
  const unpadded = 10 + dict.length + 1;
  const padding = (64 - (unpadded % 64)) % 64;
  const header = dict + " ".repeat(padding) + "\n";
  const out = Buffer.alloc(10 + header.length + arr.data.byteLength);
  out.write(NPY_MAGIC, 0, "latin1");
  out[6] = 1;
  out[7] = 0;
  out.writeUInt16LE(header.length, 8);
  out.write(header, 10, "latin1");
  out.set(new Uint8Array(arr.data.buffer, arr.data.byteOffset, arr.data.byteLength), 10 + header.length);
  return out;
}

export function readNpy(path: string): NpyArray {
  return decodeNpy(fs.readFileSync(path), path);
}

export function writeNpy(path: string, arr: NpyArray): void {
  fs.writeFileSync(path, encodeNpy(arr));
}
