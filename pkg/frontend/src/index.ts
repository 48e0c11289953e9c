/** Mirrors the native library's version. */
export const VERSION = "0.1.0";

export {
  Client,
  ServiceError,
  decode,
  evaluate,
  solve,
} from "./client";
export type { EvalMode, EvalResult, Segment, SolveReport, SolverOptions } from "./client";
export { convertFeatures } from "./convert";
export type { ConvertDirection } from "./convert";
export {
  FeatFormatError,
  FeatTruncatedError,
  decodeFeat,
  encodeFeat,
  readFeat,
  writeFeat,
} from "./feat";
export type { FeatArray } from "./feat";
export { ShapeError, fromNested, matrix, maxAbsDiff, toNested } from "./matrix";
export type { Matrix } from "./matrix";
export { NpyFormatError, decodeNpy, encodeNpy, readNpy, writeNpy } from "./npy";
export type { NpyArray, NpyDtype } from "./npy";
