"""Evaluation protocol for unsupervised and supervised segmentations.

Cluster ids carry no meaning in the unsupervised setting, so predictions
are first matched to ground-truth actions by maximum frame overlap
(minimum-cost assignment on negated overlap counts), either per video or
once over the whole dataset.  Frame accuracy (MoF), segment F1 and mean
IoU are computed on the mapped labels.  Segmental edit distance and the
IoU-thresholded F1@tau serve the supervised post-processing experiment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError
from .segmentation import Segmentation, run_length_encode

_COST_TOL = 1e-9


@dataclass
class EvalResult:
    """Metrics plus the cluster-to-action matching that produced them."""

    mof: float
    f1: float
    miou: float
    matching: Dict[int, int] = field(default_factory=dict)
    per_video: Optional[List["EvalResult"]] = None

    def to_json_obj(self):
        obj = {
            "mof": self.mof,
            "f1": self.f1,
            "miou": self.miou,
            "matching": {str(k): int(v) for k, v in sorted(self.matching.items())},
        }
        if self.per_video is not None:
            obj["per_video"] = [r.to_json_obj() for r in self.per_video]
        return obj


def _min_assignment_cost(cost: np.ndarray) -> float:
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def hungarian(cost) -> Dict[int, int]:
    """Minimum-cost injective matching of the smaller side into the larger.

    Returns {row: column} pairs.  Ties are broken deterministically: among
    all minimum-cost matchings, the one whose partner sequence (walking
    the smaller side in index order) is lexicographically smallest wins.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
        raise InvalidInputError(f"cost must be a nonempty 2-D matrix, got shape {c.shape}")
    if not np.isfinite(c).all():
        raise InvalidInputError("cost contains non-finite entries")

    transposed = c.shape[0] > c.shape[1]
    a = c.T if transposed else c
    n_small, n_large = a.shape

    # Fix partners greedily in index order: a candidate is kept whenever
    # the optimal completion of the remaining rows still reaches the
    # global minimum.  This pins the lexicographically smallest optimum.
    best = _min_assignment_cost(a)
    tol = _COST_TOL * max(1.0, float(np.abs(a).max()))
    free = list(range(n_large))
    pairs: List[Tuple[int, int]] = []
    acc = 0.0
    for s in range(n_small):
        rest = np.arange(s + 1, n_small)
        for idx, cand in enumerate(free):
            tail = a[np.ix_(rest, [x for x in free if x != cand])] if rest.size else np.zeros((0, 0))
            tail_cost = _min_assignment_cost(tail) if tail.size else 0.0
            total = acc + a[s, cand] + tail_cost
            if total <= best + tol:
                acc += a[s, cand]
                pairs.append((s, cand))
                free.pop(idx)
                break

    if transposed:
        return {col: row for row, col in pairs}
    return dict(pairs)


def _labels_of(seg) -> np.ndarray:
    if isinstance(seg, Segmentation):
        return seg.labels
    lab = np.asarray(seg, dtype=np.int64)
    if lab.ndim != 1:
        raise InvalidInputError(f"labels must be 1-D, got shape {lab.shape}")
    return lab


def _contingency(pred: Sequence[np.ndarray], gt: Sequence[np.ndarray]) -> np.ndarray:
    n_pred = int(max(p.max() for p in pred)) + 1
    n_gt = int(max(g.max() for g in gt)) + 1
    table = np.zeros((n_pred, n_gt), dtype=np.int64)
    for p, g in zip(pred, gt):
        np.add.at(table, (p, g), 1)
    return table


def _map_labels(labels: np.ndarray, matching: Dict[int, int]) -> np.ndarray:
    lut = np.full(int(labels.max()) + 1, -1, dtype=np.int64)
    for cluster, action in matching.items():
        if cluster < lut.size:
            lut[cluster] = action
    return lut[labels]


def _segment_f1_counts(pred_mapped: np.ndarray, gt: np.ndarray) -> Tuple[int, int, int, int]:
    """(true-positive gt segments, gt segments, true-positive pred segments, pred segments).

    A gt segment counts when over half of its frames are predicted with
    its label; a predicted segment counts when over half of its frames
    actually carry its label.
    """
    tp_gt = n_gt = tp_pred = n_pred = 0
    for lab, start, length in run_length_encode(gt):
        n_gt += 1
        if np.count_nonzero(pred_mapped[start : start + length] == lab) * 2 > length:
            tp_gt += 1
    for lab, start, length in run_length_encode(pred_mapped):
        n_pred += 1
        if lab >= 0 and np.count_nonzero(gt[start : start + length] == lab) * 2 > length:
            tp_pred += 1
    return tp_gt, n_gt, tp_pred, n_pred


def _f1_from_counts(tp_gt: int, n_gt: int, tp_pred: int, n_pred: int) -> float:
    recall = tp_gt / n_gt if n_gt else 0.0
    precision = tp_pred / n_pred if n_pred else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def f1_segment(pred, gt) -> float:
    """Segment-level F1 between a mapped prediction and ground truth."""
    p, g = _labels_of(pred), _labels_of(gt)
    if p.size != g.size:
        raise InvalidInputError(f"length mismatch: pred {p.size} vs gt {g.size}")
    return _f1_from_counts(*_segment_f1_counts(p, g))


def _miou(pred_mapped: np.ndarray, gt: np.ndarray) -> float:
    ious = []
    for cls in np.unique(gt):
        inter = np.count_nonzero((pred_mapped == cls) & (gt == cls))
        union = np.count_nonzero((pred_mapped == cls) | (gt == cls))
        ious.append(inter / union if union else 0.0)
    return float(np.mean(ious))


def _eval_unit(pred: List[np.ndarray], gt: List[np.ndarray]) -> EvalResult:
    """Metrics for one evaluation unit (a video, or the pooled dataset)."""
    table = _contingency(pred, gt)
    matching = hungarian(-table.astype(np.float64))
    mapped = [_map_labels(p, matching) for p in pred]

    total = sum(g.size for g in gt)
    correct = sum(int(np.count_nonzero(m == g)) for m, g in zip(mapped, gt))

    counts = np.zeros(4, dtype=np.int64)
    for m, g in zip(mapped, gt):
        counts += _segment_f1_counts(m, g)

    inter_union = {}
    for m, g in zip(mapped, gt):
        for cls in np.unique(g):
            inter = np.count_nonzero((m == cls) & (g == cls))
            union = np.count_nonzero((m == cls) | (g == cls))
            i0, u0 = inter_union.get(cls, (0, 0))
            inter_union[cls] = (i0 + inter, u0 + union)
    miou = float(np.mean([i / u if u else 0.0 for i, u in inter_union.values()]))

    return EvalResult(
        mof=correct / total,
        f1=_f1_from_counts(*counts),
        miou=miou,
        matching=matching,
    )


def evaluate(pred, gt, mode: str = "full_dataset") -> EvalResult:
    """Match predicted clusters to actions and score the predictions.

    mode "full_dataset" pools the cluster/action overlap table over all
    videos and applies one matching; "per_video" matches each video on
    its own (the more favorable protocol) and also returns the per-video
    results.  The per-video aggregate pools frames for MoF and segments
    for F1, and averages mIoU over videos.

    Raises:
        InvalidInputError: a prediction/ground-truth length mismatch; the
            message carries the video index.
    """
    if mode not in ("full_dataset", "per_video"):
        raise InvalidInputError(f"mode must be 'full_dataset' or 'per_video', got {mode!r}")
    if len(pred) != len(gt):
        raise InvalidInputError(f"got {len(pred)} predictions for {len(gt)} ground-truth videos")
    if not pred:
        raise InvalidInputError("nothing to evaluate: empty video list")
    p_labs = [_labels_of(p) for p in pred]
    g_labs = [_labels_of(g) for g in gt]
    for i, (p, g) in enumerate(zip(p_labs, g_labs)):
        if p.size != g.size:
            raise InvalidInputError(f"video {i}: length mismatch, pred {p.size} vs gt {g.size}")
        if (p < 0).any() or (g < 0).any():
            raise InvalidInputError(f"video {i}: labels must be nonnegative")

    if mode == "full_dataset":
        return _eval_unit(p_labs, g_labs)

    per_video = [_eval_unit([p], [g]) for p, g in zip(p_labs, g_labs)]
    total = sum(g.size for g in g_labs)
    correct = 0
    counts = np.zeros(4, dtype=np.int64)
    for res, p, g in zip(per_video, p_labs, g_labs):
        mapped = _map_labels(p, res.matching)
        correct += int(np.count_nonzero(mapped == g))
        counts += _segment_f1_counts(mapped, g)
    return EvalResult(
        mof=correct / total,
        f1=_f1_from_counts(*counts),
        miou=float(np.mean([r.miou for r in per_video])),
        matching={},
        per_video=per_video,
    )


def _segment_label_sequence(seg) -> List[int]:
    if isinstance(seg, Segmentation):
        return seg.segment_labels
    return [a for a, _, _ in run_length_encode(_labels_of(seg))]


def edit_distance(pred, gt) -> float:
    """Normalized segmental edit score in [0, 1]; 1 means identical order.

    One minus the Levenshtein distance between the two segment-label
    sequences, divided by the longer sequence's length.
    """
    a = _segment_label_sequence(pred)
    b = _segment_label_sequence(gt)
    la, lb = len(a), len(b)
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        for j in range(1, lb + 1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (a[i - 1] != b[j - 1]),
            )
        prev = cur
    return 1.0 - prev[lb] / max(la, lb)


def f1_at_tau(pred, gt, tau: float) -> float:
    """Segmental F1 at IoU threshold tau.

    Walking predicted segments in temporal order, each one greedily takes
    the still-unmatched same-label ground-truth segment of highest IoU; a
    match counts only when IoU strictly exceeds tau.  Segments are
    compared as frame ranges, so the two sequences may differ in length.
    """
    if not 0.0 < tau < 1.0:
        raise InvalidInputError(f"tau must be in (0, 1), got {tau}")
    p, g = _labels_of(pred), _labels_of(gt)
    pred_segs = run_length_encode(p)
    gt_segs = run_length_encode(g)
    used = [False] * len(gt_segs)
    tp = 0
    for lab, start, length in pred_segs:
        best_iou, best_idx = 0.0, -1
        for idx, (glab, gstart, glength) in enumerate(gt_segs):
            if used[idx] or glab != lab:
                continue
            lo = max(start, gstart)
            hi = min(start + length, gstart + glength)
            inter = max(0, hi - lo)
            union = length + glength - inter
            iou = inter / union
            if iou > best_iou:
                best_iou, best_idx = iou, idx
        if best_idx >= 0 and best_iou > tau:
            tp += 1
            used[best_idx] = True
    fp = len(pred_segs) - tp
    fn = len(gt_segs) - tp
    if tp == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)
