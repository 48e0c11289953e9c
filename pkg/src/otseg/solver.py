"""Fused unbalanced entropic transport solver for frame/action assignment.

Minimizes, over nonnegative plans T whose rows sum to the frame marginal p,

    alpha * <band(T), T> + (1 - alpha) * <C, T>
        + lam * KL(colsum(T) || q) + epsilon * sum(T * log T)

where band(T) is the temporal-structure product computed by
:func:`otseg.costs.gw_structure_apply`.  The column marginal is only
penalized, not constrained, so a video does not have to use every action.

The scheme is projected mirror descent in the KL geometry: multiply the
plan entrywise by exp(-phi * grad), then rescale every row back onto its
marginal.  Iterates stay strictly positive, each iteration costs O(N*K),
and with the default step size the plan typically converges within the
default 25-iteration budget.

The solve loop works on the transposed (K, N) layout internally: K is
small, so per-action vectors broadcast along contiguous rows and the
banded prefix sums run along the fast axis.  Public arrays are (N, K).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .costs import band_width, gw_structure_apply
from .errors import InvalidInputError, NumericalError

# Mirror-step exponents are clipped here before exponentiation; e^50 is
# still comfortably inside float64 range.
EXP_CLIP = 50.0
# Plan entries are floored here after each projection so logarithms stay
# finite even when an entry underflows toward zero.
_TINY_PLAN = 1e-300
_TINY_MARGINAL = 1e-30
# Objective increases below this relative tolerance are float noise and
# do not trigger the step-halving guard.
_INCREASE_RTOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Solver hyperparameters.

    alpha weighs the temporal-structure term against the matching cost,
    lam the KL penalty pulling column marginals toward their target, and
    epsilon the entropy smoothing.  radius is the structure band radius
    as a fraction of the video length.  step_size None selects
    1 / (epsilon + lam), which makes the entropy part of the mirror step
    exact and keeps the marginal-penalty feedback loop contractive even
    for large lam.  stop_tol 0 runs the fixed n_iter budget.
    """

    alpha: float = 0.6
    lam: float = 0.01
    epsilon: float = 0.04
    radius: float = 0.04
    step_size: Optional[float] = None
    n_iter: int = 25
    stop_tol: float = 0.0
    adaptive_step: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.lam < 0:
            raise InvalidInputError(f"lam must be >= 0, got {self.lam}")
        if self.epsilon <= 0:
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0.0 <= self.radius <= 1.0:
            raise InvalidInputError(f"radius must be in [0, 1], got {self.radius}")
        if self.step_size is not None and self.step_size <= 0:
            raise InvalidInputError(f"step_size must be > 0, got {self.step_size}")
        if self.n_iter < 1:
            raise InvalidInputError(f"n_iter must be >= 1, got {self.n_iter}")
        if self.stop_tol < 0:
            raise InvalidInputError(f"stop_tol must be >= 0, got {self.stop_tol}")

    @property
    def effective_step(self) -> float:
        return self.step_size if self.step_size is not None else 1.0 / (self.epsilon + self.lam)


@dataclass
class TransportPlan:
    """A solved coupling with the marginals it was solved against."""

    plan: np.ndarray
    row_marginal: np.ndarray
    col_target: np.ndarray


@dataclass
class SolveReport:
    """Per-solve diagnostics.

    objective_trace[t] is the objective of the iterate entering iteration
    t, so trace[0] is the initialization and running n+1 iterations
    records the objective after iteration n.  clip_count counts entries
    whose mirror-step exponent hit the +/-EXP_CLIP guard.
    """

    objective_trace: np.ndarray
    n_iter_run: int
    converged: bool
    clip_count: int = 0
    max_row_violation: float = 0.0
    final_objective: float = float("nan")
    step_halvings: int = 0


def _marginals(n: int, k: int, p, q):
    p = np.full(n, 1.0 / n) if p is None else np.asarray(p, dtype=np.float64)
    q = np.full(k, 1.0 / k) if q is None else np.asarray(q, dtype=np.float64)
    if p.shape != (n,) or (p <= 0).any():
        raise InvalidInputError("row marginal must be a positive length-N vector")
    if q.shape != (k,) or (q <= 0).any():
        raise InvalidInputError("column target must be a positive length-K vector")
    return p, q


def _plan_array(plan) -> np.ndarray:
    t = plan.plan if isinstance(plan, TransportPlan) else plan
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 2:
        raise InvalidInputError(f"plan must be 2-D, got shape {t.shape}")
    if (t < 0).any():
        raise InvalidInputError("plan entries must be >= 0")
    return t


def objective(cost, plan, cfg: SolverConfig, q=None) -> float:
    """Objective value at an arbitrary nonnegative plan (0*log 0 := 0)."""
    c = np.asarray(cost, dtype=np.float64)
    t = _plan_array(plan)
    if isinstance(plan, TransportPlan) and q is None:
        q = plan.col_target
    _, q = _marginals(t.shape[0], t.shape[1], None, q)
    total = (1.0 - cfg.alpha) * float(np.sum(c * t))
    if cfg.alpha > 0:
        total += cfg.alpha * float(np.sum(gw_structure_apply(t, cfg.radius) * t))
    if cfg.lam > 0:
        m = t.sum(axis=0)
        pos = m > 0
        total += cfg.lam * float(np.sum(m[pos] * np.log(m[pos] / q[pos])))
    pos = t > 0
    total += cfg.epsilon * float(np.sum(t[pos] * np.log(t[pos])))
    return total


def gradient(cost, plan, cfg: SolverConfig, q=None) -> np.ndarray:
    """Analytic gradient of :func:`objective` at a strictly positive plan.

    The structure term contributes twice its product because both factor
    matrices are symmetric; column marginals are floored at a tiny
    constant before the log so early extreme iterates stay finite.
    """
    c = np.asarray(cost, dtype=np.float64)
    t = _plan_array(plan)
    if isinstance(plan, TransportPlan) and q is None:
        q = plan.col_target
    _, q = _marginals(t.shape[0], t.shape[1], None, q)
    g = (1.0 - cfg.alpha) * c
    if cfg.alpha > 0:
        g = g + 2.0 * cfg.alpha * gw_structure_apply(t, cfg.radius)
    if cfg.lam > 0:
        m = np.maximum(t.sum(axis=0), _TINY_MARGINAL)
        g = g + cfg.lam * (np.log(m / q) + 1.0)[None, :]
    g = g + cfg.epsilon * (np.log(np.maximum(t, _TINY_PLAN)) + 1.0)
    return g


def _ddot(a: np.ndarray, b: np.ndarray) -> float:
    # einsum stays single-threaded; BLAS ddot spawns threads whose sync
    # overhead dwarfs the product at these sizes
    return float(np.einsum("ij,ij->", a, b))


def solve(cost, cfg: Optional[SolverConfig] = None, p=None, q=None):
    """Run projected mirror descent from the product-measure start.

    Args:
        cost: (N, K) nonnegative matching cost.
        cfg: solver configuration; defaults to ``SolverConfig()``.
        p: row marginal, uniform 1/N when omitted.
        q: column target, uniform 1/K when omitted.

    Returns:
        (TransportPlan, SolveReport).  Rows of the plan sum to p exactly
        up to float arithmetic after every iteration.

    Raises:
        NumericalError: the plan picked up NaN/Inf; the message carries
            the iteration index.
    """
    if cfg is None:
        cfg = SolverConfig()
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise InvalidInputError(f"cost must be 2-D, got shape {c.shape}")
    if not np.isfinite(c).all():
        raise InvalidInputError("cost contains non-finite entries")
    if (c < 0).any():
        raise InvalidInputError("cost entries must be >= 0")
    n, k = c.shape
    p, q = _marginals(n, k, p, q)

    phi = cfg.effective_step
    alpha, lam, eps, radius = cfg.alpha, cfg.lam, cfg.epsilon, cfg.radius
    w = band_width(n, radius)
    use_gw = alpha > 0 and w >= 1 and k > 1

    # Everything below runs on the (K, N) transpose.
    ct = np.ascontiguousarray(c.T)
    cc = (phi * (1.0 - alpha)) * ct  # recomputed if phi is halved
    s = np.outer(q / q.sum(), p)
    log_q = np.log(q)

    ut = np.empty((k, n))
    pref = np.empty((k, n + 1))
    pref[:, 0] = 0.0
    win = np.empty((k, n))
    expo = np.empty((k, n))
    logs = np.empty((k, n))
    s_prev = np.empty((k, n)) if cfg.stop_tol > 0 else None

    trace = np.empty(cfg.n_iter)
    clip_count = 0
    halvings = 0
    max_violation = 0.0
    n_run = 0
    converged = False

    def evaluate_iterate():
        """Objective at the current s; fills logs/win/log_ratio buffers
        that the subsequent mirror step reuses."""
        m = s.sum(axis=1)
        ratio = np.log(np.maximum(m, _TINY_MARGINAL)) - log_q
        np.log(s, out=logs)
        if use_gw:
            frame_sums = s.sum(axis=0)
            np.subtract(frame_sums[None, :], s, out=ut)
            np.cumsum(ut, axis=1, out=pref[:, 1:])
            win[:, : n - w] = pref[:, w + 1 :]
            win[:, n - w :] = pref[:, n:]
            win[:, w:] -= pref[:, : n - w]
            np.subtract(win, ut, out=win)
            # win / radius is the structure product in transposed layout
        value = (1.0 - alpha) * _ddot(ct, s) + eps * _ddot(s, logs)
        if use_gw:
            value += (alpha / radius) * _ddot(win, s)
        if lam > 0:
            value += lam * float(np.dot(m, ratio))
        return value, ratio

    for it in range(cfg.n_iter):
        f, log_ratio = evaluate_iterate()
        trace[it] = f
        n_run = it + 1

        # Halve the step after two consecutive genuine objective increases.
        if cfg.adaptive_step and it >= 2:
            tol1 = _INCREASE_RTOL * max(1.0, abs(trace[it - 1]))
            tol2 = _INCREASE_RTOL * max(1.0, abs(trace[it - 2]))
            if trace[it] > trace[it - 1] + tol1 and trace[it - 1] > trace[it - 2] + tol2:
                phi *= 0.5
                halvings += 1
                np.multiply(ct, phi * (1.0 - alpha), out=cc)

        # expo = -phi * gradient, accumulated in place
        if use_gw:
            np.multiply(win, -(2.0 * alpha * phi / radius), out=expo)
            expo -= cc
        else:
            np.negative(cc, out=expo)
        per_action = np.full(k, phi * eps)  # entropy's constant, per action
        if lam > 0:
            per_action += (phi * lam) * (log_ratio + 1.0)
        expo -= per_action[:, None]
        np.multiply(logs, -(phi * eps), out=logs)
        expo += logs

        hi = float(expo.max())
        lo = float(expo.min())
        if hi > EXP_CLIP or lo < -EXP_CLIP:
            clip_count += int(np.count_nonzero(np.abs(expo) > EXP_CLIP))
            np.clip(expo, -EXP_CLIP, EXP_CLIP, out=expo)

        if s_prev is not None:
            s_prev[:] = s
        np.exp(expo, out=expo)
        s *= expo
        fs = s.sum(axis=0)
        if not np.isfinite(fs).all():
            raise NumericalError(f"non-finite plan entries at iteration {it}")
        np.multiply(s, (p / fs)[None, :], out=s)
        np.maximum(s, _TINY_PLAN, out=s)
        max_violation = max(max_violation, float(np.abs(s.sum(axis=0) - p).max()))

        if s_prev is not None:
            delta = float(np.abs(s - s_prev).max())
            if delta < cfg.stop_tol:
                converged = True
                break

    final_objective, _ = evaluate_iterate()
    t = np.ascontiguousarray(s.T)
    report = SolveReport(
        objective_trace=trace[:n_run].copy(),
        n_iter_run=n_run,
        converged=converged,
        clip_count=clip_count,
        max_row_violation=max_violation,
        final_objective=final_objective,
        step_halvings=halvings,
    )
    return TransportPlan(plan=t, row_marginal=p, col_target=q), report


def solve_batch(costs: Sequence, cfg: Optional[SolverConfig] = None, p=None, q=None):
    """Solve a list of independent instances, preserving order.

    Results are identical to calling :func:`solve` per item; a failure is
    re-raised with the offending item's index prepended.
    """
    out = []
    for idx, cost in enumerate(costs):
        try:
            plan, _ = solve(cost, cfg, p=p, q=q)
        except (InvalidInputError, NumericalError) as exc:
            raise type(exc)(f"batch item {idx}: {exc}") from exc
        out.append(plan)
    return out
