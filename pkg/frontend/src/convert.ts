/** Converter between the binary feature container and .npy files. */
import { readFeat, writeFeat } from "./feat";
import { NpyFormatError, readNpy, writeNpy } from "./npy";

export type ConvertDirection = "feat-to-npy" | "npy-to-feat";

/**
 * Convert a feature file to .npy or back. The float32 payload is copied
 * verbatim in both directions, so a round trip is bitwise lossless.
 */
export function convertFeatures(src: string, dst: string, direction: ConvertDirection): void {
  if (direction === "feat-to-npy") {
    const feat = readFeat(src);
    writeNpy(dst, { dtype: "<f4", shape: [feat.rows, feat.cols], data: feat.data });
    return;
  }
  const arr = readNpy(src);
  if (arr.dtype !== "<f4") {
    throw new NpyFormatError(`${src}: feature files store float32, cannot convert ${arr.dtype}`);
  }
  writeFeat(dst, { data: arr.data as Float32Array, rows: arr.shape[0], cols: arr.shape[1] });
}
