/**
 * Reader/writer for the binary feature container used by the service's
 * datasets:
 *
 *   bytes 0-7    magic "ASOTFEAT"
 *   bytes 8-11   version, u32 little-endian (1)
 *   bytes 12-19  N (rows), u64 little-endian
 *   bytes 20-27  D (cols), u64 little-endian
 *   bytes 28-    N*D float32 little-endian, row-major
 */
import * as fs from "fs";

export const FEAT_MAGIC = "ASOTFEAT";
export const FEAT_VERSION = 1;
const HEADER_BYTES = 28;

export class FeatFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FeatFormatError";
  }
}

export class FeatTruncatedError extends FeatFormatError {}

export interface FeatArray {
  readonly data: Float32Array;
  readonly rows: number;
  readonly cols: number;
}

export function decodeFeat(buf: Buffer, name = "<buffer>"): FeatArray {
  if (buf.length < HEADER_BYTES) {
    throw new FeatTruncatedError(`${name}: shorter than the ${HEADER_BYTES}-byte header`);
  }
  const magic = buf.subarray(0, 8).toString("latin1");
  if (magic !== FEAT_MAGIC) {
    throw new FeatFormatError(`${name}: bad magic ${JSON.stringify(magic)}`);
  }
  const version = buf.readUInt32LE(8);
  if (version !== FEAT_VERSION) {
    throw new FeatFormatError(`${name}: unsupported version ${version}`);
  }
  const rows = Number(buf.readBigUInt64LE(12));
  const cols = Number(buf.readBigUInt64LE(20));
  const expected = HEADER_BYTES + 4 * rows * cols;
  if (buf.length < expected) {
    throw new FeatTruncatedError(`${name}: payload ends at byte ${buf.length}, expected ${expected}`);
  }
  if (buf.length > expected) {
    throw new FeatFormatError(`${name}: ${buf.length - expected} trailing bytes after payload`);
  }
  // copy out of the Buffer so alignment is guaranteed
  const payload = new Uint8Array(buf.subarray(HEADER_BYTES, expected));
  return { data: new Float32Array(payload.buffer, 0, rows * cols), rows, cols };
}

export function encodeFeat(arr: FeatArray): Buffer {
  if (arr.data.length !== arr.rows * arr.cols) {
    throw new FeatFormatError(
      `payload length ${arr.data.length} does not match ${arr.rows} x ${arr.cols}`
    );
  }
  const out = Buffer.alloc(HEADER_BYTES + 4 * arr.data.length);
  out.write(FEAT_MAGIC, 0, "latin1");
  out.writeUInt32LE(FEAT_VERSION, 8);
  out.writeBigUInt64LE(BigInt(arr.rows), 12);
  out.writeBigUInt64LE(BigInt(arr.cols), 20);
  out.set(new Uint8Array(arr.data.buffer, arr.data.byteOffset, 4 * arr.data.length), HEADER_BYTES);
  return out;
}

export function readFeat(path: string): FeatArray {
  return decodeFeat(fs.readFileSync(path), path);
}

export function writeFeat(path: string, arr: FeatArray): void {
  fs.writeFileSync(path, encodeFeat(arr));
}
