"""Hard segmentations and soft pseudo-labels from transport plans."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .errors import InvalidInputError, NumericalError
from .solver import TransportPlan


@dataclass
class Segmentation:
    """Per-frame action labels plus their run-length segment list.

    segments holds (action_id, start_frame, length) triples in temporal
    order; consecutive segments always carry distinct action ids and the
    lengths sum to the number of frames.
    """

    labels: np.ndarray
    segments: List[Tuple[int, int, int]] = field(default_factory=list)

    @classmethod
    def from_labels(cls, labels) -> "Segmentation":
        lab = np.asarray(labels, dtype=np.int64)
        if lab.ndim != 1 or lab.size < 1:
            raise InvalidInputError(f"labels must be a nonempty 1-D sequence, got shape {lab.shape}")
        return cls(labels=lab, segments=run_length_encode(lab))

    @property
    def n_frames(self) -> int:
        return int(self.labels.size)

    @property
    def segment_labels(self) -> List[int]:
        return [a for a, _, _ in self.segments]

    def to_json_obj(self):
        return [{"action": int(a), "start": int(s), "length": int(n)} for a, s, n in self.segments]


def run_length_encode(labels: np.ndarray) -> List[Tuple[int, int, int]]:
    lab = np.asarray(labels)
    change = np.flatnonzero(lab[1:] != lab[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [lab.size]))
    return [(int(lab[s]), int(s), int(e - s)) for s, e in zip(starts, ends)]


def _plan_of(plan) -> np.ndarray:
    t = plan.plan if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    if t.ndim != 2 or t.shape[0] < 1 or t.shape[1] < 1:
        raise InvalidInputError(f"plan must be a nonempty 2-D matrix, got shape {t.shape}")
    return t


def decode(plan) -> Segmentation:
    """Hard segmentation: per frame, the action with the largest mass.

    Ties break toward the lowest action index so decoding is
    deterministic.
    """
    t = _plan_of(plan)
    return Segmentation.from_labels(np.argmax(t, axis=1))


def to_pseudo_labels(plan) -> np.ndarray:
    """Row-normalize a plan into per-frame action distributions.

    The result is a training target, not a parameter: callers must treat
    it as a constant (no gradient flows through it).  Returned array is
    marked read-only to make accidental in-place edits loud.
    """
    t = _plan_of(plan)
    rows = t.sum(axis=1, keepdims=True)
    if (rows <= 0).any():
        raise NumericalError("plan has a zero row; cannot form per-frame distributions")
    out = t / rows
    out.flags.writeable = False
    return out


def segment_count(seg: Segmentation) -> int:
    return len(seg.segments)
