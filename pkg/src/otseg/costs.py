"""Cost construction for the frame/action transport problem.

The solver consumes a dense N x K matching cost between video frames and
action classes.  This module builds that cost from embeddings (cosine
distance), optionally adds a global temporal prior, converts supervised
logits into a cost, and applies the banded temporal-structure operator
used by the Gromov-Wasserstein part of the objective.  The two structure
matrices (the banded frame-adjacency cost and the one-minus-identity
action cost) are never materialized; only their product with a plan is
ever needed and it is computed in O(N*K) with sliding-window prefix sums.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError


def _as_matrix(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a 2-D matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InvalidInputError(f"{name} contains non-finite entries")
    return a


def build_kot_cost(frames, actions) -> np.ndarray:
    """Cosine matching cost between frame and action embeddings.

    Entries are 1 - cos(x_i, a_j), so they lie in [0, 2]: 0 for
    colinear vectors with positive scale, 2 for antiparallel ones.

    Args:
        frames: (N, D) frame embeddings.
        actions: (K, D) action embeddings.

    Raises:
        InvalidInputError: non-finite input, shape mismatch, or a
            zero-norm row (cosine undefined); the message names the row.
    """
    x = _as_matrix(frames, "frames")
    a = _as_matrix(actions, "actions")
    if x.shape[1] != a.shape[1]:
        raise InvalidInputError(
            f"feature dims differ: frames have {x.shape[1]}, actions have {a.shape[1]}"
        )
    xn = np.linalg.norm(x, axis=1)
    an = np.linalg.norm(a, axis=1)
    for norms, name in ((xn, "frames"), (an, "actions")):
        bad = np.flatnonzero(norms == 0.0)
        if bad.size:
            raise InvalidInputError(f"zero-norm row {bad[0]} in {name}")
    cost = 1.0 - (x / xn[:, None]) @ (a / an[:, None]).T
    # Cauchy-Schwarz bounds the exact value to [0, 2]; clip float residue.
    np.clip(cost, 0.0, 2.0, out=cost)
    return cost


def temporal_prior(n_frames: int, n_actions: int) -> np.ndarray:
    """Global order prior |i/N - j/K| with 0-based indices.

    The (0, 0) entry is 0, so early frames prefer early action ids; the
    prior nudges plans toward a banded diagonal / canonical ordering.
    """
    i = np.arange(n_frames, dtype=np.float64) / n_frames
    j = np.arange(n_actions, dtype=np.float64) / n_actions
    return np.abs(i[:, None] - j[None, :])


def add_temporal_prior(cost, rho: float) -> np.ndarray:
    """Return cost + rho * temporal_prior, leaving the input untouched."""
    c = _as_matrix(cost, "cost")
    if rho < 0:
        raise InvalidInputError(f"rho must be >= 0, got {rho}")
    if rho == 0:
        return c.copy()
    n, k = c.shape
    return c + rho * temporal_prior(n, k)


def band_width(n_frames: int, radius: float) -> int:
    """Number of neighbors on each side of a frame inside the band.

    floor(N * r), capped at N - 1 (offsets beyond that do not exist).
    """
    return min(int(np.floor(n_frames * radius)), n_frames - 1)


def gw_structure_apply(plan, radius: float) -> np.ndarray:
    """Apply the temporal-structure operator to a plan: band @ plan @ offdiag.

    Equivalent to C_v @ T @ C_a where C_v is the N x N banded matrix with
    value 1/r at offsets 1..floor(N*r) and C_a the K x K one-minus-identity
    matrix, evaluated without materializing either factor.  Runs in O(N*K)
    using sliding-window prefix sums over rows.
    """
    t = _as_matrix(plan, "plan")
    if not 0.0 <= radius <= 1.0:
        raise InvalidInputError(f"radius must be in [0, 1], got {radius}")
    n, k = t.shape
    w = band_width(n, radius)
    if w < 1 or k == 1:
        return np.zeros_like(t)
    # Right factor: (T @ C_a)_il = rowsum_i(T) - T_il.
    u = t.sum(axis=1, keepdims=True) - t
    # Left factor: windowed row sums at offsets 1..w, weighted 1/r.
    # Window [max(i-w,0), min(i+w,n-1)] as prefix-sum differences; the
    # clamped ends are plain slices, so no gather is needed.
    pref = np.empty((n + 1, k), dtype=np.float64)
    pref[0] = 0.0
    np.cumsum(u, axis=0, out=pref[1:])
    window = np.empty_like(u)
    window[: n - w] = pref[w + 1 :]
    window[n - w :] = pref[n]
    window[w:] -= pref[: n - w]
    return (window - u) / radius


def logits_to_cost(logits) -> np.ndarray:
    """Min-max rescale classifier logits into a cost in [0, 2].

    The largest logit maps to cost 0, the smallest to cost 2.

    Raises:
        DegenerateInputError: all logits equal; the resulting all-zero
            cost would make the transport problem ill-posed.  Callers
            that want a uniform cost must substitute one explicitly.
    """
    l = _as_matrix(logits, "logits")
    lmin, lmax = l.min(), l.max()
    if lmax == lmin:
        raise DegenerateInputError("constant logits: min equals max, cost would be all-zero")
    return 2.0 * (1.0 - (l - lmin) / (lmax - lmin))


@dataclass(frozen=True)
class CostSet:
    """A matching cost plus the band radius of its implicit structure costs."""

    kot_cost: np.ndarray
    band_radius: float

    def __post_init__(self):
        c = _as_matrix(self.kot_cost, "kot_cost")
        if (c < 0).any():
            raise InvalidInputError("kot_cost entries must be >= 0")
        if not 0.0 <= self.band_radius <= 1.0:
            raise InvalidInputError(f"band_radius must be in [0, 1], got {self.band_radius}")
        object.__setattr__(self, "kot_cost", c)

    @property
    def n_frames(self) -> int:
        return self.kot_cost.shape[0]

    @property
    def n_actions(self) -> int:
        return self.kot_cost.shape[1]

    @classmethod
    def from_embeddings(cls, frames, actions, radius: float, rho: float = 0.0) -> "CostSet":
        cost = build_kot_cost(frames, actions)
        if rho:
            cost = add_temporal_prior(cost, rho)
        return cls(kot_cost=cost, band_radius=radius)
