"""File formats and the synthetic dataset generator.

Features travel in a minimal, bit-exactly specified binary container:

    bytes 0-7    magic "ASOTFEAT"
    bytes 8-11   format version, u32 little-endian (currently 1)
    bytes 12-19  N (frame count), u64 little-endian
    bytes 20-27  D (feature dim), u64 little-endian
    bytes 28-    N*D float32 little-endian, row-major

Labels are UTF-8 newline-delimited integers, one frame per line.  The
synthetic generator plants ground-truth segmentations: well-separated
unit prototypes, per-video class proportions drawn from a Dirichlet (low
concentration gives the long-tailed distributions real datasets show),
contiguous segments with optional order shuffling and repeated actions,
and isotropic Gaussian frame noise.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import List

import numpy as np

from .errors import (
    BadMagicError,
    InvalidInputError,
    LabelParseError,
    NonFiniteDataError,
    TruncatedPayloadError,
)

FEATURE_MAGIC = b"ASOTFEAT"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<8sIQQ")


def write_features(path, x) -> None:
    """Write a 2-D float array; values are stored as little-endian float32."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInputError(f"features must be a nonempty 2-D matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise NonFiniteDataError("refusing to write non-finite features")
    payload = a.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, a.shape[0], a.shape[1]))
        fh.write(payload)


def read_features(path) -> np.ndarray:
    """Read a feature file, widening the float32 payload to float64."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, n, d = _HEADER.unpack_from(data)
    if magic != FEATURE_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    if version != FEATURE_VERSION:
        raise BadMagicError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 4 * n * d
    if len(data) < expected:
        raise TruncatedPayloadError(f"{path}: payload ends at byte {len(data)}, expected {expected}")
    if len(data) > expected:
        raise BadMagicError(f"{path}: {len(data) - expected} trailing bytes after payload")
    flat = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    x = flat.astype(np.float64).reshape(n, d)
    if not np.isfinite(x).all():
        raise NonFiniteDataError(f"{path}: payload contains NaN/Inf")
    return x


def write_labels(path, labels) -> None:
    lab = np.asarray(labels, dtype=np.int64).ravel()
    with open(path, "w", encoding="utf-8") as fh:
        for v in lab:
            fh.write(f"{int(v)}\n")


def read_labels(path) -> np.ndarray:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                out.append(int(text))
            except ValueError:
                raise LabelParseError(ln, text) from None
    return np.asarray(out, dtype=np.int64)


@dataclass(frozen=True)
class SynthSpec:
    """Knobs of the synthetic generator; identical spec+seed means
    bitwise identical output."""

    n_videos: int = 20
    n_actions: int = 6
    dim: int = 16
    n_frames: int = 480
    mean_segments_per_video: float = 8.0
    noise_sigma: float = 0.1
    class_concentration: float = 0.5
    order_variation: bool = True
    repeat_actions: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("n_videos", "n_actions", "dim", "n_frames"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.mean_segments_per_video < 1:
            raise InvalidInputError("mean_segments_per_video must be >= 1")
        if self.noise_sigma < 0:
            raise InvalidInputError("noise_sigma must be >= 0")
        if self.class_concentration <= 0:
            raise InvalidInputError("class_concentration must be > 0")


@dataclass
class SynthDataset:
    features: List[np.ndarray]
    labels: List[np.ndarray]
    prototypes: np.ndarray
    spec: SynthSpec


_MAX_PROTO_COS = 0.3
_PROTO_ATTEMPTS = 10_000


def _draw_prototypes(rng: np.random.Generator, k: int, d: int) -> np.ndarray:
    protos = np.empty((k, d))
    have = 0
    for _ in range(_PROTO_ATTEMPTS):
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        if have == 0 or np.abs(protos[:have] @ v).max() <= _MAX_PROTO_COS:
            protos[have] = v
            have += 1
            if have == k:
                return protos
    raise InvalidInputError(
        f"could not place {k} prototypes with pairwise |cos| <= {_MAX_PROTO_COS} "
        f"in {d} dims after {_PROTO_ATTEMPTS} draws; lower n_actions or raise dim"
    )


def _video_actions(rng: np.random.Generator, spec: SynthSpec, props: np.ndarray) -> List[int]:
    k = spec.n_actions
    n_seg = max(1, int(rng.poisson(spec.mean_segments_per_video)))
    if not spec.repeat_actions:
        n_seg = min(n_seg, k)
        acts = list(rng.choice(k, size=n_seg, replace=False, p=props / props.sum()))
        acts.sort()
    else:
        acts = []
        prev = -1
        for _ in range(n_seg):
            w = props.copy()
            if prev >= 0 and k > 1:
                w[prev] = 0.0
            a = int(rng.choice(k, p=w / w.sum()))
            acts.append(a)
            prev = a
        if not spec.order_variation:
            acts.sort()
    if spec.order_variation:
        perm = rng.permutation(len(acts))
        acts = [acts[i] for i in perm]
    # adjacent duplicates would merge into one segment; nudge them apart
    out = [acts[0]]
    for a in acts[1:]:
        if a == out[-1] and k > 1:
            choices = [x for x in range(k) if x != a]
            a = int(rng.choice(choices))
        out.append(a)
    return out


def _segment_lengths(rng: np.random.Generator, n: int, weights: np.ndarray) -> np.ndarray:
    lens = np.maximum(1, np.round(n * weights / weights.sum()).astype(np.int64))
    while lens.sum() > n:
        lens[np.argmax(lens)] -= 1
    while lens.sum() < n:
        lens[np.argmin(lens)] += 1
    return lens


def synth_generate(spec: SynthSpec) -> SynthDataset:
    """Generate a planted dataset; see the module docstring for the recipe."""
    rng = np.random.default_rng(spec.seed)
    protos = _draw_prototypes(rng, spec.n_actions, spec.dim)
    features, labels = [], []
    for _ in range(spec.n_videos):
        props = rng.dirichlet(np.full(spec.n_actions, spec.class_concentration))
        props = np.maximum(props, 1e-6)
        acts = _video_actions(rng, spec, props)
        lens = _segment_lengths(rng, spec.n_frames, np.array([props[a] for a in acts]))
        lab = np.repeat(acts, lens)
        x = protos[lab] + spec.noise_sigma * rng.standard_normal((spec.n_frames, spec.dim))
        features.append(x)
        labels.append(lab)
    return SynthDataset(features=features, labels=labels, prototypes=protos, spec=spec)


def save_dataset(outdir, ds: SynthDataset) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for i, (x, lab) in enumerate(zip(ds.features, ds.labels)):
        write_features(out / f"video_{i:03d}.feat", x)
        write_labels(out / f"video_{i:03d}.txt", lab)
    write_features(out / "prototypes.feat", ds.prototypes)
    (out / "spec.json").write_text(json.dumps(asdict(ds.spec), indent=2) + "\n")


def load_dataset_features(datadir) -> List[np.ndarray]:
    paths = sorted(Path(datadir).glob("video_*.feat"))
    if not paths:
        raise InvalidInputError(f"no video_*.feat files under {datadir}")
    return [read_features(p) for p in paths]


def load_dataset_labels(datadir) -> List[np.ndarray]:
    paths = sorted(Path(datadir).glob("video_*.txt"))
    if not paths:
        raise InvalidInputError(f"no video_*.txt files under {datadir}")
    return [read_labels(p) for p in paths]


# Encoder checkpoints: magic, version, shape header, then float64 payloads
# in a fixed parameter order (parameters, first moments, second moments).

CHECKPOINT_MAGIC = b"ASOTCKPT"
CHECKPOINT_VERSION = 1
_CKPT_HEADER = struct.Struct("<8sIQQQQQ")


def save_checkpoint(path, state) -> None:
    d_in, hidden = state.w1.shape
    out_dim = state.w2.shape[1]
    k = state.actions.shape[0]
    order = ("w1", "b1", "w2", "b2", "actions")
    with open(path, "wb") as fh:
        fh.write(
            _CKPT_HEADER.pack(
                CHECKPOINT_MAGIC, CHECKPOINT_VERSION, d_in, hidden, out_dim, k, state.step_count
            )
        )
        for name in order:
            fh.write(np.ascontiguousarray(getattr(state, name), dtype="<f8").tobytes())
        for buf in (state.adam_m, state.adam_v):
            for name in order:
                fh.write(np.ascontiguousarray(buf[name], dtype="<f8").tobytes())


def load_checkpoint(path):
    from .learn import EncoderState  # deferred: avoids a module cycle

    data = Path(path).read_bytes()
    if len(data) < _CKPT_HEADER.size:
        raise TruncatedPayloadError(f"{path}: file shorter than the checkpoint header")
    magic, version, d_in, hidden, out_dim, k, step_count = _CKPT_HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    if version != CHECKPOINT_VERSION:
        raise BadMagicError(f"{path}: unsupported version {version}")
    shapes = [(d_in, hidden), (hidden,), (hidden, out_dim), (out_dim,), (k, out_dim)]
    total = sum(int(np.prod(s)) for s in shapes)
    expected = _CKPT_HEADER.size + 8 * total * 3
    if len(data) != expected:
        raise TruncatedPayloadError(f"{path}: size {len(data)}, expected {expected}")
    flat = np.frombuffer(data, dtype="<f8", offset=_CKPT_HEADER.size).astype(np.float64)

    arrays = []
    pos = 0
    for _ in range(3):
        group = []
        for s in shapes:
            size = int(np.prod(s))
            group.append(flat[pos : pos + size].reshape(s).copy())
            pos += size
        arrays.append(group)
    names = ("w1", "b1", "w2", "b2", "actions")
    params, moments_m, moments_v = arrays
    return EncoderState(
        w1=params[0],
        b1=params[1],
        w2=params[2],
        b2=params[3],
        actions=params[4],
        adam_m=dict(zip(names, moments_m)),
        adam_v=dict(zip(names, moments_v)),
        step_count=int(step_count),
    )
