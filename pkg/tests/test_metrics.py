import numpy as np
import pytest

from otseg import (
    InvalidInputError,
    edit_distance,
    evaluate,
    f1_at_tau,
    f1_segment,
    hungarian,
)

from _oracles import brute_force_assignment


class TestHungarian:
    def test_identity_cost(self):
        cost = 1.0 - np.eye(3)
        assert hungarian(cost) == {0: 0, 1: 1, 2: 2}

    def test_matches_brute_force_square(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            k = int(rng.integers(1, 7))
            cost = rng.integers(0, 10, size=(k, k)).astype(float)
            got = hungarian(cost)
            want, want_cost = brute_force_assignment(cost)
            got_cost = sum(cost[r, c] for r, c in got.items())
            assert got_cost == pytest.approx(want_cost)
            assert got == want

    def test_matches_brute_force_rectangular(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            k1 = int(rng.integers(1, 7))
            k2 = int(rng.integers(1, 7))
            cost = rng.integers(0, 10, size=(k1, k2)).astype(float)
            got = hungarian(cost)
            want, want_cost = brute_force_assignment(cost)
            assert len(got) == min(k1, k2)
            got_cost = sum(cost[r, c] for r, c in got.items())
            assert got_cost == pytest.approx(want_cost)
            assert got == want

    def test_two_by_three(self):
        cost = np.array([[5.0, 1.0, 3.0], [2.0, 4.0, 6.0]])
        got = hungarian(cost)
        want, want_cost = brute_force_assignment(cost)
        assert got == want
        assert sum(cost[r, c] for r, c in got.items()) == want_cost

    def test_tie_break_lexicographic(self):
        # all-equal costs: every assignment optimal, identity is smallest
        assert hungarian(np.ones((3, 3))) == {0: 0, 1: 1, 2: 2}

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            hungarian(np.array([[np.inf, 1.0]]))


class TestEvaluate:
    def test_perfect_identity(self):
        gt = [np.array([0, 0, 1, 1, 2])]
        res = evaluate(gt, gt)
        assert res.mof == 1.0 and res.f1 == 1.0 and res.miou == 1.0

    def test_permuted_ids_still_perfect(self):
        gt = [np.array([0, 0, 1, 1, 2, 2]), np.array([2, 2, 0, 0])]
        perm = {0: 2, 1: 0, 2: 1}
        pred = [np.vectorize(perm.get)(g) for g in gt]
        for mode in ("full_dataset", "per_video"):
            res = evaluate(pred, gt, mode=mode)
            assert res.mof == 1.0 and res.f1 == 1.0 and res.miou == 1.0

    def test_hand_computed_two_video(self):
        # video A: pred cluster 0 covers gt 0 (3 frames) and gt 1 (1 frame)
        # video B: pred cluster 1 covers gt 1 (2 frames); cluster 0 covers gt 0 (2 frames)
        pred = [np.array([0, 0, 0, 0]), np.array([0, 0, 1, 1])]
        gt = [np.array([0, 0, 0, 1]), np.array([0, 0, 1, 1])]
        res = evaluate(pred, gt, mode="full_dataset")
        # pooled overlaps: cluster0/gt0 = 5, cluster0/gt1 = 1, cluster1/gt1 = 2
        # matching: 0 -> 0, 1 -> 1; correct frames = 5 + 2 = 7 of 8
        assert res.matching == {0: 0, 1: 1}
        assert res.mof == pytest.approx(7 / 8)
        # IoU: class 0: inter 5, union 6; class 1: inter 2, union 3
        assert res.miou == pytest.approx((5 / 6 + 2 / 3) / 2)

    def test_per_video_at_least_full(self):
        rng = np.random.default_rng(2)
        gt, pred = [], []
        for v in range(6):
            g = rng.integers(0, 4, size=50)
            # per-video confusions differ: permute clusters differently per video
            perm = rng.permutation(4)
            pred.append(perm[g])
            gt.append(g)
        full = evaluate(pred, gt, mode="full_dataset")
        per = evaluate(pred, gt, mode="per_video")
        assert per.mof >= full.mof
        assert per.per_video is not None and len(per.per_video) == 6

    def test_length_mismatch_names_video(self):
        with pytest.raises(InvalidInputError, match="video 1"):
            evaluate([np.zeros(3, int), np.zeros(4, int)], [np.zeros(3, int), np.zeros(5, int)])

    def test_mode_validated(self):
        with pytest.raises(InvalidInputError):
            evaluate([np.zeros(3, int)], [np.zeros(3, int)], mode="bogus")


class TestF1Segment:
    def test_identical(self):
        lab = np.array([0, 0, 1, 1, 1, 2])
        assert f1_segment(lab, lab) == 1.0

    def test_hand_case(self):
        # one gt segment of 10 frames; pred correct on 6 of them and one
        # wrong-label extra segment: recall 1, precision 1/2, F1 = 2/3
        gt = np.zeros(10, dtype=int)
        pred = np.array([0, 0, 0, 0, 0, 0, 1, 1, 1, 1])
        assert f1_segment(pred, gt) == pytest.approx(2 / 3)

    def test_disjoint(self):
        assert f1_segment(np.zeros(6, int), np.ones(6, int)) == 0.0


class TestEditDistance:
    def test_identical(self):
        assert edit_distance(np.array([0, 0, 1, 2]), np.array([0, 1, 1, 2])) == pytest.approx(1.0)

    def test_single_disjoint(self):
        assert edit_distance(np.array([0, 0]), np.array([1, 1])) == 0.0

    def test_hand_levenshtein(self):
        # segment sequences [A,B,C] vs [A,C]: one deletion over max length 3
        pred = np.array([0, 0, 1, 2, 2])
        gt = np.array([0, 2, 2, 2, 2])
        assert edit_distance(pred, gt) == pytest.approx(2 / 3)


class TestF1AtTau:
    def test_identical(self):
        lab = np.array([0, 0, 1, 1, 2, 2])
        assert f1_at_tau(lab, lab, 0.5) == 1.0

    def test_half_overlap_single_segments(self):
        # one pred segment covering exactly half of one same-label gt
        # segment: IoU = 0.5, a TP below tau = 0.5 but not at it
        gt = np.zeros(10, dtype=int)
        pred = np.zeros(5, dtype=int)
        assert f1_at_tau(pred, gt, 0.25) == 1.0
        assert f1_at_tau(pred, gt, 0.5) == 0.0  # strict: 0.5 is not > 0.5

    def test_no_label_overlap(self):
        assert f1_at_tau(np.zeros(4, int), np.ones(4, int), 0.3) == 0.0

    def test_non_increasing_in_tau(self):
        rng = np.random.default_rng(3)
        pred = rng.integers(0, 3, size=60)
        gt = np.repeat(rng.integers(0, 3, size=6), 10)
        values = [f1_at_tau(pred, gt, tau) for tau in (0.1, 0.25, 0.5, 0.75, 0.9)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_tau_validated(self):
        with pytest.raises(InvalidInputError):
            f1_at_tau(np.zeros(3, int), np.zeros(3, int), 1.0)


class TestMetricRanges:
    def test_all_in_unit_interval(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            pred = rng.integers(0, 5, size=40)
            gt = np.repeat(rng.integers(0, 5, size=4), 10)
            res = evaluate([pred], [gt])
            for v in (res.mof, res.f1, res.miou):
                assert 0.0 <= v <= 1.0
            assert 0.0 <= edit_distance(pred, gt) <= 1.0
            assert 0.0 <= f1_at_tau(pred, gt, 0.5) <= 1.0
