"""Self-training pipeline: encoder, pseudo-label solves, Adam updates.

A one-hidden-layer ReLU network maps raw per-frame features to
l2-normalized embeddings.  Each training step samples frames from a
small batch of videos, builds the cosine cost against the current action
embeddings plus the global order prior, solves the transport problem,
and treats the row-normalized plan as a fixed target for a cross-entropy
loss on temperature-scaled embedding/action similarities.  The encoder
and the action embeddings are updated jointly; gradients are derived by
hand (softmax, matrix products, l2 normalization, ReLU) and checked
against finite differences in the tests.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from .costs import add_temporal_prior, build_kot_cost
from .errors import InvalidInputError, NumericalError
from .segmentation import Segmentation, decode, to_pseudo_labels
from .solver import SolverConfig, solve

_NORM_FLOOR = 1e-12
_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8

_PARAM_NAMES = ("w1", "b1", "w2", "b2", "actions")


@dataclass
class EncoderState:
    """Network parameters, action embeddings and Adam moment buffers."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    actions: np.ndarray
    adam_m: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: Dict[str, np.ndarray] = field(default_factory=dict)
    step_count: int = 0

    def __post_init__(self):
        if not self.adam_m:
            self.adam_m = {n: np.zeros_like(getattr(self, n)) for n in _PARAM_NAMES}
        if not self.adam_v:
            self.adam_v = {n: np.zeros_like(getattr(self, n)) for n in _PARAM_NAMES}

    def params(self) -> Dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in _PARAM_NAMES}

    def copy(self) -> "EncoderState":
        return EncoderState(
            w1=self.w1.copy(),
            b1=self.b1.copy(),
            w2=self.w2.copy(),
            b2=self.b2.copy(),
            actions=self.actions.copy(),
            adam_m={k: v.copy() for k, v in self.adam_m.items()},
            adam_v={k: v.copy() for k, v in self.adam_v.items()},
            step_count=self.step_count,
        )


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; solver settings differ between the
    pseudo-labelling (training) and segmentation (inference) phases, and
    the order prior weight rho applies only when pseudo-labelling."""

    lr: float = 1e-3
    weight_decay: float = 1e-4
    tau: float = 0.1
    frames_per_video: int = 256
    batch_videos: int = 2
    epochs: int = 30
    hidden: int = 128
    out_dim: int = 40
    rho: float = 0.15
    seed: int = 0
    solver_train: SolverConfig = field(
        default_factory=lambda: SolverConfig(alpha=0.3, lam=0.1, epsilon=0.07, radius=0.04)
    )
    solver_infer: SolverConfig = field(
        default_factory=lambda: SolverConfig(alpha=0.6, lam=0.01, epsilon=0.04, radius=0.04)
    )
    n_actions: int = 6

    def __post_init__(self):
        positive = ("lr", "tau", "frames_per_video", "batch_videos", "hidden", "out_dim", "n_actions")
        for name in positive:
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.weight_decay < 0 or self.rho < 0 or self.epochs < 0:
            raise InvalidInputError("weight_decay, rho and epochs must be >= 0")


@dataclass
class TrainReport:
    """Per-step pre-update losses, matching post-update losses on the
    same batch and pseudo-labels, and per-epoch means."""

    step_losses: List[float] = field(default_factory=list)
    post_update_losses: List[float] = field(default_factory=list)
    epoch_losses: List[float] = field(default_factory=list)


def kmeans_init(points, k: int, seed: int = 0) -> np.ndarray:
    """Seeded k-means++ followed by Lloyd iterations.

    Stops after 100 rounds or when no centroid moves more than 1e-6.
    Empty clusters are reseeded with the point farthest from its
    centroid.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidInputError(f"points must be 2-D, got shape {x.shape}")
    n = x.shape[0]
    if n < k:
        raise InvalidInputError(f"need at least {k} points for {k} centroids, got {n}")
    rng = np.random.default_rng(seed)

    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    dist2 = np.sum((x - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = dist2.sum()
        if total <= 0:
            centroids[j] = x[rng.integers(n)]
        else:
            centroids[j] = x[rng.choice(n, p=dist2 / total)]
        dist2 = np.minimum(dist2, np.sum((x - centroids[j]) ** 2, axis=1))

    for _ in range(100):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)
        new = centroids.copy()
        for j in range(k):
            members = assign == j
            if members.any():
                new[j] = x[members].mean(axis=0)
            else:
                new[j] = x[np.argmax(d2[np.arange(n), assign])]
        shift = np.abs(new - centroids).max()
        centroids = new
        if shift < 1e-6:
            break
    return centroids


def init_state(d_in: int, cfg: TrainConfig, rng: np.random.Generator) -> EncoderState:
    """Symmetric uniform fan-in initialization; action embeddings start
    at zero and are meant to be replaced by a k-means pass."""

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    return EncoderState(
        w1=uniform((d_in, cfg.hidden), d_in),
        b1=uniform((cfg.hidden,), d_in),
        w2=uniform((cfg.hidden, cfg.out_dim), cfg.hidden),
        b2=uniform((cfg.out_dim,), cfg.hidden),
        actions=np.zeros((cfg.n_actions, cfg.out_dim)),
    )


def _forward_cache(state: EncoderState, x_raw: np.ndarray):
    x = np.asarray(x_raw, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != state.w1.shape[0]:
        raise InvalidInputError(
            f"input shape {x.shape} does not match encoder input dim {state.w1.shape[0]}"
        )
    pre = x @ state.w1 + state.b1
    h = np.maximum(pre, 0.0)
    y = h @ state.w2 + state.b2
    norms = np.linalg.norm(y, axis=1, keepdims=True)
    floored = norms < _NORM_FLOOR
    if floored.any():
        warnings.warn("encoder produced near-zero-norm rows; norms floored", RuntimeWarning)
    safe = np.maximum(norms, _NORM_FLOOR)
    emb = y / safe
    return emb, (x, pre, h, y, safe)


def forward(state: EncoderState, x_raw) -> np.ndarray:
    """Embed raw frames: linear, ReLU, linear, then row-wise l2 norm."""
    emb, _ = _forward_cache(state, x_raw)
    return emb


def soft_assign(emb, actions, tau: float) -> np.ndarray:
    """Rows are softmax(emb @ actions.T / tau); log-sum-exp stabilized."""
    if tau <= 0:
        raise InvalidInputError(f"tau must be > 0, got {tau}")
    logits = np.asarray(emb) @ np.asarray(actions).T / tau
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=1, keepdims=True)


def ce_loss_and_grads(
    state: EncoderState,
    batch_x: List[np.ndarray],
    batch_pseudo: List[np.ndarray],
    tau: float,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Cross-entropy between soft assignments and fixed pseudo-labels.

    The loss sums over frames and actions and averages over the batch;
    pseudo-labels are constants (no gradient path flows through the
    solve that produced them).  Returns the loss and gradients for every
    parameter, accumulated over the batch.
    """
    if len(batch_x) != len(batch_pseudo) or not batch_x:
        raise InvalidInputError("batch features and pseudo-labels must align and be nonempty")
    nb = len(batch_x)
    loss = 0.0
    grads = {n: np.zeros_like(getattr(state, n)) for n in _PARAM_NAMES}
    for x_raw, pseudo in zip(batch_x, batch_pseudo):
        pseudo = np.asarray(pseudo, dtype=np.float64)
        emb, (x, pre, h, y, safe) = _forward_cache(state, x_raw)
        p = soft_assign(emb, state.actions, tau)
        loss += -float(np.sum(pseudo * np.log(np.maximum(p, 1e-300)))) / nb

        d_logits = (p - pseudo) / nb                      # CE through softmax
        grads["actions"] += d_logits.T @ emb / tau
        d_emb = d_logits @ state.actions / tau
        # back through y / max(||y||, floor): project out the radial part
        d_y = (d_emb - emb * np.sum(d_emb * emb, axis=1, keepdims=True)) / safe
        grads["w2"] += h.T @ d_y
        grads["b2"] += d_y.sum(axis=0)
        d_h = d_y @ state.w2.T
        d_pre = d_h * (pre > 0)
        grads["w1"] += x.T @ d_pre
        grads["b1"] += d_pre.sum(axis=0)
    return loss, grads


def adam_step(state: EncoderState, grads: Dict[str, np.ndarray], cfg: TrainConfig) -> EncoderState:
    """One Adam update with decoupled weight decay, applied in place."""
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - _ADAM_BETA1**t
    bc2 = 1.0 - _ADAM_BETA2**t
    for name in _PARAM_NAMES:
        g = grads[name]
        m = state.adam_m[name]
        v = state.adam_v[name]
        m *= _ADAM_BETA1
        m += (1.0 - _ADAM_BETA1) * g
        v *= _ADAM_BETA2
        v += (1.0 - _ADAM_BETA2) * g * g
        p = getattr(state, name)
        p -= cfg.lr * (m / bc1) / (np.sqrt(v / bc2) + _ADAM_EPS)
        if cfg.weight_decay > 0:
            p -= cfg.lr * cfg.weight_decay * p
    return state


def sample_frames(n_frames: int, n_samples: int, rng) -> np.ndarray:
    """One uniform draw per interval [floor(k*N/n), floor((k+1)*N/n)).

    Intervals tile the video, so indices come out sorted; empty intervals
    (when N < n_samples) contribute their left endpoint, repeating
    indices rather than failing.
    """
    if n_frames < 1:
        raise InvalidInputError(f"n_frames must be >= 1, got {n_frames}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    edges = (np.arange(n_samples + 1) * n_frames) // n_samples
    out = np.empty(n_samples, dtype=np.int64)
    for k in range(n_samples):
        lo, hi = edges[k], edges[k + 1]
        out[k] = rng.integers(lo, hi) if hi > lo else min(lo, n_frames - 1)
    return out


def make_pseudo_labels(
    state: EncoderState, x_raw: np.ndarray, cfg: TrainConfig
) -> np.ndarray:
    """Solve for soft targets on one video's (sampled) frames.

    Uses the training-phase solver settings and adds the order prior
    weighted by rho; the result is row-normalized and read-only.
    """
    emb = forward(state, x_raw)
    cost = build_kot_cost(emb, state.actions)
    if cfg.rho > 0:
        cost = add_temporal_prior(cost, cfg.rho)
    plan, _ = solve(cost, cfg.solver_train)
    return to_pseudo_labels(plan)


def train(dataset: List[np.ndarray], cfg: TrainConfig) -> Tuple[EncoderState, TrainReport]:
    """Run the self-training loop and return the final state.

    Deterministic for a given (dataset, cfg, seed).  Epoch order:
    shuffle videos, take batches of cfg.batch_videos, sample frames per
    video, pseudo-label with the training solver, then one joint Adam
    step on the encoder and action embeddings.
    """
    if not dataset:
        raise InvalidInputError("dataset must contain at least one video")
    rng = np.random.default_rng(cfg.seed)
    d_in = np.asarray(dataset[0]).shape[1]
    state = init_state(d_in, cfg, rng)

    pooled = np.vstack([forward(state, x) for x in dataset])
    state.actions = kmeans_init(pooled, cfg.n_actions, seed=cfg.seed)
    state.adam_m["actions"] = np.zeros_like(state.actions)
    state.adam_v["actions"] = np.zeros_like(state.actions)

    report = TrainReport()
    for _ in range(cfg.epochs):
        order = rng.permutation(len(dataset))
        epoch_losses = []
        for start in range(0, len(order), cfg.batch_videos):
            vids = order[start : start + cfg.batch_videos]
            batch_x, batch_pseudo = [], []
            for v in vids:
                x = np.asarray(dataset[v], dtype=np.float64)
                idx = sample_frames(x.shape[0], cfg.frames_per_video, rng)
                xs = x[idx]
                try:
                    pseudo = make_pseudo_labels(state, xs, cfg)
                except NumericalError as exc:
                    raise NumericalError(f"video {v}: {exc}") from exc
                batch_x.append(xs)
                batch_pseudo.append(pseudo)
            loss, grads = ce_loss_and_grads(state, batch_x, batch_pseudo, cfg.tau)
            adam_step(state, grads, cfg)
            post, _ = ce_loss_and_grads(state, batch_x, batch_pseudo, cfg.tau)
            report.step_losses.append(loss)
            report.post_update_losses.append(post)
            epoch_losses.append(loss)
        report.epoch_losses.append(float(np.mean(epoch_losses)))
    return state, report


def segment_videos(
    state: EncoderState, dataset: List[np.ndarray], cfg: TrainConfig
) -> List[Segmentation]:
    """Decode full videos with the inference-phase solver (no order prior)."""
    out = []
    for x in dataset:
        emb = forward(state, x)
        cost = build_kot_cost(emb, state.actions)
        plan, _ = solve(cost, cfg.solver_infer)
        out.append(decode(plan))
    return out
