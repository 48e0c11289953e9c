"""Independent oracles used by the tests.

Everything here deliberately takes the slow, literal route (dense
matrices, exhaustive enumeration, finite differences) so it shares no
code path with the implementations it checks.
"""
import itertools

import numpy as np


def dense_band_matrix(n: int, radius: float) -> np.ndarray:
    """The banded frame-adjacency cost, materialized."""
    w = int(np.floor(n * radius))
    c = np.zeros((n, n))
    for i in range(n):
        for k in range(n):
            if 1 <= abs(i - k) <= w:
                c[i, k] = 1.0 / radius
    return c


def dense_offdiag_matrix(k: int) -> np.ndarray:
    return 1.0 - np.eye(k)


def dense_structure_product(t: np.ndarray, radius: float) -> np.ndarray:
    """C_v @ T @ C_a evaluated with materialized factors."""
    n, k = t.shape
    return dense_band_matrix(n, radius) @ t @ dense_offdiag_matrix(k)


def dense_gw_value(t: np.ndarray, radius: float) -> float:
    """The quadratic structure objective, via the full 4-index sum shape."""
    return float(np.sum(dense_structure_product(t, radius) * t))


def brute_force_assignment(cost: np.ndarray):
    """Exhaustive minimum-cost injective matching of the smaller side.

    Iterates candidate tuples in lexicographic order and keeps the first
    strict minimum, which pins the same tie-break the implementation
    promises.  Returns ({row: col}, total_cost).
    """
    c = np.asarray(cost, dtype=np.float64)
    transposed = c.shape[0] > c.shape[1]
    a = c.T if transposed else c
    n_small, n_large = a.shape
    best_cost, best_tuple = None, None
    for cols in itertools.permutations(range(n_large), n_small):
        total = sum(a[i, j] for i, j in enumerate(cols))
        if best_cost is None or total < best_cost - 1e-12:
            best_cost, best_tuple = total, cols
    pairs = list(enumerate(best_tuple))
    if transposed:
        return {col: row for row, col in pairs}, best_cost
    return dict(pairs), best_cost


def central_difference_gradient(fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Coordinate-wise central differences of a scalar function."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (fn(xp) - fn(xm)) / (2 * h)
    return g


def planted_labels(n: int, k: int, n_segments: int, rng: np.random.Generator,
                   concentration: float = 2.0) -> np.ndarray:
    """Contiguous segments over a random action sequence with
    Dirichlet-proportional lengths."""
    props = np.maximum(rng.dirichlet(np.full(k, concentration)), 1e-6)
    acts = []
    prev = -1
    for _ in range(n_segments):
        w = props.copy()
        if prev >= 0 and k > 1:
            w[prev] = 0.0
        a = int(rng.choice(k, p=w / w.sum()))
        acts.append(a)
        prev = a
    w = np.array([props[a] for a in acts])
    lens = np.maximum(1, np.round(n * w / w.sum()).astype(np.int64))
    while lens.sum() > n:
        lens[np.argmax(lens)] -= 1
    while lens.sum() < n:
        lens[np.argmin(lens)] += 1
    return np.repeat(acts, lens)


def block_cost(labels: np.ndarray, k: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """0/1 oracle cost for planted labels plus Gaussian noise, shifted
    nonnegative (a constant shift does not move the optimum)."""
    n = len(labels)
    c = np.ones((n, k))
    c[np.arange(n), labels] = 0.0
    c = c + sigma * rng.standard_normal((n, k))
    return c - c.min()
