/** Flat float64 matrices with explicit shape, validated before dispatch. */

export class ShapeError extends Error {
  constructor(public readonly expected: string, public readonly actual: string) {
    super(`shape mismatch: expected ${expected}, got ${actual}`);
    this.name = "ShapeError";
  }
}

export interface Matrix {
  readonly data: Float64Array;
  readonly rows: number;
  readonly cols: number;
}

/**
 * Wrap a buffer as a rows x cols matrix. The buffer must be contiguous:
 * its length has to equal rows * cols exactly (a view of a larger or
 * strided buffer is rejected rather than silently copied).
 */
export function matrix(data: Float64Array, rows: number, cols: number): Matrix {
  if (!Number.isInteger(rows) || !Number.isInteger(cols) || rows < 1 || cols < 1) {
    throw new ShapeError("positive integer rows x cols", `${rows} x ${cols}`);
  }
  if (data.length !== rows * cols) {
    throw new ShapeError(`${rows * cols} elements (${rows} x ${cols})`, `${data.length} elements`);
  }
  return { data, rows, cols };
}

export function fromNested(values: number[][]): Matrix {
  const rows = values.length;
  if (rows === 0) throw new ShapeError("at least one row", "0 rows");
  const cols = values[0].length;
  const data = new Float64Array(rows * cols);
  for (let i = 0; i < rows; i++) {
    if (values[i].length !== cols) {
      throw new ShapeError(`${cols} columns in every row`, `${values[i].length} in row ${i}`);
    }
    data.set(values[i], i * cols);
  }
  return matrix(data, rows, cols);
}

export function toNested(m: Matrix): number[][] {
  const out: number[][] = new Array(m.rows);
  for (let i = 0; i < m.rows; i++) {
    out[i] = Array.from(m.data.subarray(i * m.cols, (i + 1) * m.cols));
  }
  return out;
}

export function maxAbsDiff(a: Matrix, b: Matrix): number {
  if (a.rows !== b.rows || a.cols !== b.cols) {
    throw new ShapeError(`${a.rows} x ${a.cols}`, `${b.rows} x ${b.cols}`);
  }
  let worst = 0;
  for (let i = 0; i < a.data.length; i++) {
    const d = Math.abs(a.data[i] - b.data[i]);
    if (d > worst) worst = d;
  }
  return worst;
}
