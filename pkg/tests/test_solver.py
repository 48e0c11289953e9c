import numpy as np
import pytest

from otseg import (
    InvalidInputError,
    NumericalError,
    SolverConfig,
    gradient,
    objective,
    solve,
    solve_batch,
)

from _oracles import block_cost, central_difference_gradient, dense_gw_value, planted_labels


def entropic_row_softmax(cost, epsilon):
    """Closed-form optimum of the alpha=0, lam=0 problem."""
    z = np.exp(-np.asarray(cost) / epsilon)
    return z / z.sum(axis=1, keepdims=True) / cost.shape[0]


class TestConfig:
    def test_validation(self):
        with pytest.raises(InvalidInputError):
            SolverConfig(alpha=1.5)
        with pytest.raises(InvalidInputError):
            SolverConfig(epsilon=0.0)
        with pytest.raises(InvalidInputError):
            SolverConfig(lam=-1.0)
        with pytest.raises(InvalidInputError):
            SolverConfig(n_iter=0)
        with pytest.raises(InvalidInputError):
            SolverConfig(step_size=-2.0)

    def test_auto_step(self):
        assert SolverConfig(epsilon=0.05, lam=0.0).effective_step == pytest.approx(20.0)
        assert SolverConfig(epsilon=0.04, lam=0.01, step_size=3.0).effective_step == 3.0

    def test_inference_defaults_pinned(self):
        cfg = SolverConfig()
        assert cfg.n_iter == 25
        assert cfg.epsilon == 0.04
        assert cfg.lam == 0.01
        assert cfg.alpha == 0.6
        assert cfg.radius == 0.04
        assert cfg.stop_tol == 0.0


class TestObjective:
    def test_uniform_plan_entropy_only(self):
        # alpha=0, lam=0, zero cost: only the entropy term survives
        eps = 0.3
        cfg = SolverConfig(alpha=0.0, lam=0.0, epsilon=eps, radius=0.04)
        t = np.full((2, 2), 0.25)
        assert objective(np.zeros((2, 2)), t, cfg) == pytest.approx(eps * np.log(0.25))

    def test_single_action_drops_structure(self):
        eps = 0.1
        cfg = SolverConfig(alpha=1.0, lam=0.0, epsilon=eps, radius=0.5)
        t = np.full((4, 1), 0.25)
        assert objective(np.zeros((4, 1)), t, cfg) == pytest.approx(eps * np.log(0.25))

    def test_matches_dense_term_by_term(self):
        rng = np.random.default_rng(11)
        n, k = 17, 4
        cfg = SolverConfig(alpha=0.35, lam=0.2, epsilon=0.07, radius=0.15)
        c = rng.random((n, k))
        t = rng.random((n, k)) / (n * k)
        q = np.full(k, 1.0 / k)
        m = t.sum(axis=0)
        want = (
            cfg.alpha * dense_gw_value(t, cfg.radius)
            + (1 - cfg.alpha) * np.sum(c * t)
            + cfg.lam * np.sum(m * np.log(m / q))
            + cfg.epsilon * np.sum(t * np.log(t))
        )
        assert objective(c, t, cfg) == pytest.approx(want, rel=1e-12)

    def test_zero_entries_use_xlogx_convention(self):
        cfg = SolverConfig(alpha=0.0, lam=0.1, epsilon=0.5, radius=0.04)
        t = np.array([[0.5, 0.0], [0.5, 0.0]])
        v = objective(np.zeros((2, 2)), t, cfg)
        assert np.isfinite(v)


class TestGradient:
    @pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0])
    @pytest.mark.parametrize("lam", [0.0, 0.16])
    @pytest.mark.parametrize("eps", [0.04, 0.07])
    def test_finite_differences(self, alpha, lam, eps):
        rng = np.random.default_rng(hash((alpha, lam, eps)) % 2**32)
        n, k = 20, 4
        cfg = SolverConfig(alpha=alpha, lam=lam, epsilon=eps, radius=0.2)
        c = rng.random((n, k))
        # interior point bounded away from zero so the central-difference
        # step stays well inside the entropy term's curvature scale
        t = rng.uniform(0.5, 1.5, size=(n, k))
        t /= t.sum()
        g = gradient(c, t, cfg)
        fd = central_difference_gradient(lambda x: objective(c, x, cfg), t)
        rel = np.abs(g - fd).max() / np.abs(fd).max()
        assert rel <= 1e-5

    def test_simple_terms_isolated(self):
        rng = np.random.default_rng(13)
        c = rng.random((6, 3))
        t = rng.random((6, 3)) + 0.1
        cfg = SolverConfig(alpha=0.0, lam=0.0, epsilon=0.05, radius=0.04)
        np.testing.assert_allclose(
            gradient(c, t, cfg), c + cfg.epsilon * (np.log(t) + 1.0), atol=1e-12
        )

    def test_vanishing_entropy_limit(self):
        # alpha=0, lam=0: the gradient tends to the bare cost as the
        # entropy weight vanishes
        rng = np.random.default_rng(14)
        c = rng.random((5, 3))
        t = rng.random((5, 3)) + 0.5
        g = gradient(c, t, SolverConfig(alpha=0.0, lam=0.0, epsilon=1e-9, radius=0.04))
        np.testing.assert_allclose(g, c, atol=1e-8)


class TestSolve:
    def test_one_by_one_forced(self):
        plan, report = solve(np.array([[0.7]]), SolverConfig(n_iter=5))
        np.testing.assert_allclose(plan.plan, [[1.0]], atol=1e-12)
        assert report.n_iter_run == 5

    def test_closed_form_limit(self):
        rng = np.random.default_rng(14)
        c = rng.random((60, 7))
        cfg = SolverConfig(alpha=0.0, lam=0.0, epsilon=0.05, radius=0.04, n_iter=60)
        plan, _ = solve(c, cfg)
        np.testing.assert_allclose(plan.plan, entropic_row_softmax(c, 0.05), atol=1e-6)

    def test_row_marginal_every_iteration(self):
        rng = np.random.default_rng(15)
        c = rng.random((40, 5)) * 2
        plan, report = solve(c, SolverConfig(n_iter=50))
        assert report.max_row_violation <= 1e-9
        np.testing.assert_allclose(plan.plan.sum(axis=1), np.full(40, 1 / 40), atol=1e-12)

    def test_positivity(self):
        rng = np.random.default_rng(16)
        c = rng.random((30, 4)) * 2
        plan, _ = solve(c, SolverConfig(n_iter=40))
        assert (plan.plan > 0).all()

    def test_balanced_limit(self):
        for seed in range(5):
            rng = np.random.default_rng(17 + seed)
            c = rng.random((20, 5))
            cfg = SolverConfig(alpha=0.0, lam=100.0, epsilon=0.05, radius=0.04, n_iter=200)
            plan, _ = solve(c, cfg)
            assert np.abs(plan.plan.sum(axis=0) - 0.2).max() <= 1e-3

    def test_nonuniform_marginals(self):
        rng = np.random.default_rng(18)
        c = rng.random((10, 3))
        p = rng.dirichlet(np.ones(10))
        q = rng.dirichlet(np.ones(3))
        plan, _ = solve(c, SolverConfig(n_iter=30), p=p, q=q)
        np.testing.assert_allclose(plan.plan.sum(axis=1), p, atol=1e-12)

    def test_trace_matches_objective(self):
        # trace[t] must equal the public objective at the entering iterate
        rng = np.random.default_rng(19)
        c = rng.random((15, 4))
        cfg = SolverConfig(n_iter=1)
        t0 = np.full((15, 4), 1.0 / 60)
        plan, report = solve(c, cfg)
        assert report.objective_trace[0] == pytest.approx(objective(c, t0, cfg), rel=1e-12)

    def test_final_objective_consistent(self):
        rng = np.random.default_rng(20)
        c = rng.random((12, 3))
        cfg = SolverConfig(n_iter=10)
        plan, report = solve(c, cfg)
        assert report.final_objective == pytest.approx(objective(c, plan.plan, cfg), rel=1e-12)

    def test_block_instance_structure_helps(self):
        # planted blocks: adding the structure term merges segments and
        # matches the planted labels at least as well
        rng = np.random.default_rng(21)
        lab = planted_labels(240, 6, 6, rng)
        c = block_cost(lab, 6, 0.55, rng)
        fused = SolverConfig(alpha=0.3, lam=0.05, epsilon=0.04, radius=0.04)
        plain = SolverConfig(alpha=0.0, lam=0.05, epsilon=0.04, radius=0.04)
        pf, _ = solve(c, fused)
        pp, _ = solve(c, plain)
        lf = np.argmax(pf.plan, axis=1)
        lp = np.argmax(pp.plan, axis=1)
        n_seg = lambda l: 1 + int(np.sum(l[1:] != l[:-1]))
        assert n_seg(lf) < n_seg(lp)
        assert np.mean(lf == lab) >= np.mean(lp == lab)

    def test_early_stop(self):
        rng = np.random.default_rng(22)
        c = rng.random((20, 4))
        cfg = SolverConfig(alpha=0.0, lam=0.0, epsilon=0.05, radius=0.04, n_iter=500, stop_tol=1e-12)
        plan, report = solve(c, cfg)
        assert report.converged
        assert report.n_iter_run < 500
        assert len(report.objective_trace) == report.n_iter_run

    def test_rejects_bad_cost(self):
        with pytest.raises(InvalidInputError):
            solve(np.array([[1.0, -0.1]]), SolverConfig())
        with pytest.raises(InvalidInputError):
            solve(np.array([[np.inf, 0.0]]), SolverConfig())

    def test_deterministic(self):
        rng = np.random.default_rng(23)
        c = rng.random((25, 5))
        p1, _ = solve(c, SolverConfig())
        p2, _ = solve(c, SolverConfig())
        np.testing.assert_array_equal(p1.plan, p2.plan)

    def test_trace_non_increasing_after_warmup(self):
        # default step on block-cost instances: after the first three
        # iterations the objective must not rise by more than 1e-8
        for seed in range(10):
            rng = np.random.default_rng(10_000 + seed)
            lab = planted_labels(240, 6, 6, rng)
            c = block_cost(lab, 6, 0.55, np.random.default_rng(20_000 + seed))
            _, report = solve(c, SolverConfig(n_iter=50))
            tr = report.objective_trace
            increases = np.diff(tr[3:])
            assert increases.max() <= 1e-8, f"seed {seed}: objective rose by {increases.max()}"

    def test_exponent_clipping_counted(self):
        # a cost spread of 10 at epsilon 0.04 pushes mirror-step
        # exponents past the guard; the solve must stay finite and count
        # the clipped entries
        rng = np.random.default_rng(27)
        c = 10.0 * rng.random((30, 4))
        plan, report = solve(c, SolverConfig(alpha=0.0, lam=0.0, epsilon=0.04, radius=0.04))
        assert report.clip_count > 0
        assert np.isfinite(plan.plan).all()
        np.testing.assert_allclose(plan.plan.sum(axis=1), 1 / 30, atol=1e-12)


class TestSolveBatch:
    def test_empty(self):
        assert solve_batch([]) == []

    def test_single_matches_solve(self):
        rng = np.random.default_rng(24)
        c = rng.random((12, 3))
        batch = solve_batch([c], SolverConfig())
        single, _ = solve(c, SolverConfig())
        np.testing.assert_array_equal(batch[0].plan, single.plan)

    def test_identical_items_identical_plans(self):
        rng = np.random.default_rng(25)
        c = rng.random((9, 2))
        out = solve_batch([c, c.copy()], SolverConfig())
        np.testing.assert_array_equal(out[0].plan, out[1].plan)

    def test_failure_carries_index(self):
        good = np.random.default_rng(26).random((5, 2))
        bad = np.array([[1.0, np.nan]])
        with pytest.raises(InvalidInputError, match="batch item 1"):
            solve_batch([good, bad])
