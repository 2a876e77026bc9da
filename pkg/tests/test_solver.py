import math

import numpy as np
import pytest

from sdca.data import parse_svmlight
from sdca.losses import make_loss
from sdca.solver import (
    ConfigError,
    SolverConfig,
    SolverState,
    dual_objective,
    duality_gap,
    modified_sgd_epoch,
    primal_objective,
    run_cyclic,
    run_sdca,
    run_sdca_perm,
    run_sdca_sgd_init,
    run_sgd_baseline,
    sdca_step,
    solve,
    w_of_alpha,
)

from synth import classification_dataset, regression_dataset

TOY = parse_svmlight("+1 1:1.0\n")


def toy_config(**kw):
    base = dict(loss=make_loss("hinge"), lam=1.0, epochs=1, output="final", seed=0)
    base.update(kw)
    return SolverConfig(**base)


class TestObjectives:
    def test_primal_at_zero_hinge(self):
        ds = classification_dataset(50, 10, seed=0)
        p = primal_objective(make_loss("hinge"), 0.5, ds, np.zeros(ds.dim))
        assert p == pytest.approx(1.0)

    def test_primal_at_zero_squared_unit_labels(self):
        ds = parse_svmlight("1 1:0.5\n1 2:0.5\n")
        p = primal_objective(make_loss("squared"), 1.0, ds, np.zeros(2))
        assert p == pytest.approx(1.0)

    def test_toy_primal(self):
        p = primal_objective(make_loss("hinge"), 1.0, TOY, np.array([1.0]))
        assert p == pytest.approx(0.5)

    def test_dual_at_zero(self):
        ds = classification_dataset(50, 10, seed=1)
        for name in ("hinge", "smoothed-hinge", "absdev", "squared", "logistic"):
            d = dual_objective(make_loss(name), 0.5, ds, np.zeros(ds.n))
            assert d == 0.0

    def test_toy_dual(self):
        d = dual_objective(make_loss("hinge"), 1.0, TOY, np.array([1.0]))
        assert d == pytest.approx(0.5)

    def test_dual_rejects_infeasible(self):
        with pytest.raises(ValueError):
            dual_objective(make_loss("hinge"), 1.0, TOY, np.array([1.5]))

    def test_w_of_alpha(self):
        assert w_of_alpha(1.0, TOY, np.zeros(1)) == pytest.approx([0.0])
        assert w_of_alpha(1.0, TOY, np.array([2.0])) == pytest.approx([2.0])
        ds = parse_svmlight("+1 1:1\n+1 2:1\n")
        np.testing.assert_allclose(w_of_alpha(0.5, ds, np.array([1.0, 1.0])),
                                   [1.0, 1.0])


class TestStep:
    def test_toy_composition(self):
        state = SolverState(alpha=np.zeros(1), w=np.zeros(1))
        sdca_step(state, 0, make_loss("hinge"), 1.0, TOY)
        assert state.alpha[0] == 1.0
        assert state.w[0] == 1.0
        assert state.t == 1

    def test_zero_delta_only_advances_counter(self):
        state = SolverState(alpha=np.array([1.0]), w=np.array([1.0]), t=5,
                            dual_value=0.5)
        sdca_step(state, 0, make_loss("hinge"), 1.0, TOY)
        assert state.t == 6
        assert state.alpha[0] == 1.0
        assert state.w[0] == 1.0
        assert state.dual_value == 0.5

    def test_dual_never_decreases_random_steps(self):
        ds = classification_dataset(40, 8, seed=3)
        rng = np.random.default_rng(0)
        for name in ("hinge", "smoothed-hinge", "absdev", "squared", "logistic"):
            loss = make_loss(name)
            lam = 0.05
            state = SolverState(alpha=np.zeros(ds.n), w=np.zeros(ds.dim))
            prev = dual_objective(loss, lam, ds, state.alpha)
            for _ in range(200):
                i = int(rng.integers(0, ds.n))
                sdca_step(state, i, loss, lam, ds)
                cur = dual_objective(loss, lam, ds, state.alpha)
                assert cur >= prev - 1e-12
                assert cur == pytest.approx(state.dual_value, abs=1e-10)
                prev = cur


class TestRunSdca:
    def test_toy_converges_in_one_epoch(self):
        res = run_sdca(toy_config(), TOY)
        assert res.final_gap == 0.0
        assert res.trace[-1].epoch == 1

    def test_epochs_zero_rejected(self):
        with pytest.raises(ConfigError):
            run_sdca(toy_config(epochs=0), TOY)

    def test_bad_labels_rejected(self):
        ds = parse_svmlight("2 1:1\n")
        with pytest.raises(ConfigError, match="labels"):
            run_sdca(toy_config(), ds)

    def test_unnormalized_warns(self):
        ds = parse_svmlight("+1 1:3\n-1 1:-3\n")
        with pytest.warns(RuntimeWarning, match="norm"):
            run_sdca(toy_config(epochs=1), ds)

    def test_gap_trace_decreases_with_noise(self):
        ds = classification_dataset(300, 20, seed=4)
        cfg = SolverConfig(loss=make_loss("smoothed-hinge", 1.0), lam=1e-2,
                           epochs=8, output="final", seed=1)
        res = run_sdca(cfg, ds)
        gaps = [r.gap for r in res.trace]
        assert all(g >= -1e-10 for g in gaps)
        # The dual is monotone and the primal tracks the improving w; allow
        # per-epoch noise but require clear overall decrease.
        assert gaps[-1] < 1e-2 * gaps[0]

    def test_determinism_bit_identical(self):
        ds = classification_dataset(100, 10, seed=5)
        cfg = SolverConfig(loss=make_loss("logistic"), lam=1e-2, epochs=3,
                           output="average", seed=9)
        r1 = solve(cfg, ds)
        r2 = solve(cfg, ds)
        assert [(t.epoch, t.primal, t.dual, t.gap) for t in r1.trace] == \
               [(t.epoch, t.primal, t.dual, t.gap) for t in r2.trace]
        np.testing.assert_array_equal(r1.w, r2.w)
        np.testing.assert_array_equal(r1.alpha, r2.alpha)

    def test_seed_changes_trajectory(self):
        ds = classification_dataset(100, 10, seed=5)
        r1 = solve(SolverConfig(loss=make_loss("logistic"), lam=1e-2, epochs=2,
                                seed=0), ds)
        r2 = solve(SolverConfig(loss=make_loss("logistic"), lam=1e-2, epochs=2,
                                seed=1), ds)
        assert r1.trace[1].dual != r2.trace[1].dual

    def test_feasibility_hinge_alpha_bounded(self):
        ds = classification_dataset(150, 10, seed=6)
        cfg = SolverConfig(loss=make_loss("hinge"), lam=1e-3, epochs=5,
                           output="final", seed=2)
        seen = []
        solve(cfg, ds, step_callback=lambda s, i, d: seen.append(
            abs(float(s.alpha[i]))))
        assert max(seen) <= 1.0

    def test_averaging_identity(self):
        ds = classification_dataset(120, 10, seed=7)
        cfg = SolverConfig(loss=make_loss("smoothed-hinge", 1.0), lam=1e-2,
                           epochs=4, output="average", seed=3)
        collected = {"alpha": [], "w": []}

        def cb(state, i, delta):
            # Reconstruct the averaged iterates: pre-step states of steps
            # t0+1..T are the post-step states at t0..T-1 plus the initial.
            collected["alpha"].append(state.alpha.copy())
            collected["w"].append(state.w.copy())

        res = solve(cfg, ds, step_callback=cb)
        total = cfg.epochs * ds.n
        t0 = total // 2
        # post-step states t = t0..T-1 are entries t0-1..T-2 of collected.
        alphas = collected["alpha"][t0 - 1: total - 1]
        ws = collected["w"][t0 - 1: total - 1]
        alpha_bar = np.mean(alphas, axis=0)
        w_bar_running = np.mean(ws, axis=0)
        np.testing.assert_allclose(res.alpha, alpha_bar, atol=1e-12)
        np.testing.assert_allclose(res.w, w_of_alpha(cfg.lam, ds, alpha_bar),
                                   atol=1e-12)
        np.testing.assert_allclose(w_bar_running, res.w, atol=1e-10)

    def test_random_iterate_output_is_visited_state(self):
        ds = classification_dataset(60, 8, seed=8)
        cfg = SolverConfig(loss=make_loss("hinge"), lam=1e-2, epochs=3,
                           output="random", seed=4)
        states = []
        res = solve(cfg, ds, step_callback=lambda s, i, d: states.append(
            (s.t, s.alpha.copy())))
        match = [t for t, a in states if np.array_equal(a, res.alpha)]
        assert match, "random-iterate output must equal some visited state"
        total, t0 = cfg.resolve_horizon(ds.n)
        assert any(t0 + 1 <= t <= total for t in match)

    def test_w_consistency_at_epoch_boundaries(self):
        ds = classification_dataset(200, 15, seed=9)
        cfg = SolverConfig(loss=make_loss("squared"), lam=1e-2, epochs=5,
                           output="final", seed=5)
        res = solve(cfg, ds)
        rebuilt = w_of_alpha(cfg.lam, ds, res.alpha_final)
        assert np.max(np.abs(rebuilt - res.w_final)) <= 1e-8

    def test_stop_gap_early_termination(self):
        ds = classification_dataset(200, 10, seed=10)
        cfg = SolverConfig(loss=make_loss("smoothed-hinge", 1.0), lam=1e-1,
                           epochs=400, output="final", seed=6, stop_gap=1e-8)
        res = solve(cfg, ds)
        assert res.stopped_early
        assert res.final_gap <= 1e-8
        assert res.trace[-1].epoch < 400

    def test_total_steps_override(self):
        ds = classification_dataset(50, 5, seed=11)
        cfg = SolverConfig(loss=make_loss("hinge"), lam=1e-1, epochs=3,
                           output="final", seed=7, total_steps=70, t0_steps=10)
        res = solve(cfg, ds)
        assert res.steps_run == 70

    def test_average_output_falls_back_to_final_on_early_stop(self):
        # Stops before the averaging window opens; output degrades to the
        # final state rather than an empty average.
        ds = classification_dataset(100, 10, seed=29)
        cfg = SolverConfig(loss=make_loss("smoothed-hinge", 1.0), lam=0.5,
                           epochs=400, output="average", seed=0, stop_gap=1e-3)
        res = solve(cfg, ds)
        assert res.stopped_early
        np.testing.assert_array_equal(res.alpha, res.alpha_final)

    def test_gap_every(self):
        ds = classification_dataset(50, 5, seed=12)
        cfg = SolverConfig(loss=make_loss("hinge"), lam=1e-1, epochs=6,
                           output="final", seed=8, gap_every=3)
        res = solve(cfg, ds)
        assert [r.epoch for r in res.trace] == [0, 3, 6]


class TestSchedules:
    def test_perm_touches_every_index_once_per_epoch(self):
        ds = classification_dataset(40, 6, seed=13)
        cfg = SolverConfig(loss=make_loss("hinge"), lam=1e-1, epochs=3,
                           output="final", seed=9)
        visits = []
        run_sdca_perm(cfg, ds, step_callback=lambda s, i, d: visits.append(i))
        for e in range(3):
            epoch_visits = visits[e * ds.n: (e + 1) * ds.n]
            assert sorted(epoch_visits) == list(range(ds.n))

    def test_cyclic_reuses_one_permutation(self):
        ds = classification_dataset(30, 6, seed=14)
        cfg = SolverConfig(loss=make_loss("hinge"), lam=1e-1, epochs=3,
                           output="final", seed=10)
        visits = []
        run_cyclic(cfg, ds, step_callback=lambda s, i, d: visits.append(i))
        first = visits[: ds.n]
        assert visits[ds.n: 2 * ds.n] == first
        assert visits[2 * ds.n:] == first
        assert sorted(first) == list(range(ds.n))

    def test_n1_all_schedules_identical(self):
        for runner in (run_sdca, run_sdca_perm, run_cyclic):
            res = runner(toy_config(), TOY)
            assert res.final_gap == 0.0
            assert res.alpha_final[0] == 1.0


class TestModifiedSgd:
    def test_first_step_interior(self):
        # t=1, hinge, y=+1, ||x||^2=1, lambda=0.5: argmax alpha - alpha^2 over
        # [0, 1] is 0.5.
        ds = parse_svmlight("+1 1:1.0\n-1 2:1.0\n")
        alpha = modified_sgd_epoch(make_loss("hinge"), 0.5, ds, [0, 1])
        assert alpha[0] == pytest.approx(0.5)

    def test_first_step_clipped(self):
        ds = parse_svmlight("+1 1:1.0\n-1 2:1.0\n")
        alpha = modified_sgd_epoch(make_loss("hinge"), 2.0, ds, [0, 1])
        assert alpha[0] == 1.0

    def test_telescoping_w_identity(self):
        ds = classification_dataset(80, 10, seed=15)
        loss = make_loss("hinge")
        lam = 0.05
        order = np.random.default_rng(0).permutation(ds.n)
        alpha = modified_sgd_epoch(loss, lam, ds, order)
        # Rebuild w two ways; the incremental recurrence must telescope.
        w = np.zeros(ds.dim)
        for pos, i in enumerate(order, start=1):
            cols, vals = ds.row(int(i))
            w *= (pos - 1) / pos
            if cols.size:
                w[cols] += (alpha[i] / (lam * pos)) * vals
        np.testing.assert_allclose(w, w_of_alpha(lam, ds, alpha), atol=1e-8)

    def test_order_respected(self):
        ds = parse_svmlight("+1 1:1.0\n+1 1:1.0\n")
        a_fwd = modified_sgd_epoch(make_loss("hinge"), 0.5, ds, [0, 1])
        a_rev = modified_sgd_epoch(make_loss("hinge"), 0.5, ds, [1, 0])
        assert a_fwd[0] == a_rev[1]
        assert a_fwd[1] == a_rev[0]


class TestSgdInit:
    def test_stage2_initial_dual_nonnegative(self):
        ds = classification_dataset(100, 10, seed=16)
        cfg = SolverConfig(loss=make_loss("hinge"), lam=0.1, epochs=2,
                           init="sgd", output="final", seed=11)
        res = solve(cfg, ds)
        assert res.trace[0].dual >= 0.0

    def test_zero_init_matches_run_sdca_bitwise(self):
        ds = classification_dataset(100, 10, seed=17)
        cfg = SolverConfig(loss=make_loss("hinge"), lam=0.1, epochs=3,
                           init="zero", output="final", seed=12)
        r1 = run_sdca(cfg, ds)
        r2 = solve(cfg, ds)
        assert [(t.primal, t.dual) for t in r1.trace] == \
               [(t.primal, t.dual) for t in r2.trace]
        np.testing.assert_array_equal(r1.alpha_final, r2.alpha_final)

    def test_warm_start_helps_at_large_lambda(self):
        ds = classification_dataset(400, 20, seed=18)
        base = SolverConfig(loss=make_loss("hinge"), lam=0.1, epochs=1,
                            output="final", seed=13)
        cold = run_sdca(base, ds)
        warm = run_sdca_sgd_init(base, ds)
        assert warm.trace[0].dual > cold.trace[0].dual


class TestSgdBaseline:
    def test_first_step_ignores_w(self):
        ds = parse_svmlight("+1 1:1.0\n")
        cfg = SolverConfig(loss=make_loss("hinge"), lam=0.5, epochs=1, seed=0,
                           output="final")
        w, trace = run_sgd_baseline(cfg, ds)
        # t=1: (1 - 1/1) w - (1/lambda) phi'(0) x = (1/0.5) * 1 * x = 2x,
        # then t>=2 shrinks and may add more; with n=1 one epoch is one step.
        assert w[0] == pytest.approx(2.0)

    def test_trace_has_no_dual(self):
        ds = classification_dataset(50, 5, seed=19)
        cfg = SolverConfig(loss=make_loss("hinge"), lam=1e-2, epochs=2, seed=1,
                           output="final")
        _, trace = run_sgd_baseline(cfg, ds)
        assert all(r.dual is None and r.gap is None for r in trace)
        assert all(np.isfinite(r.primal) for r in trace)

    def test_deterministic(self):
        ds = classification_dataset(50, 5, seed=20)
        cfg = SolverConfig(loss=make_loss("hinge"), lam=1e-2, epochs=2, seed=2,
                           output="final")
        w1, t1 = run_sgd_baseline(cfg, ds)
        w2, t2 = run_sgd_baseline(cfg, ds)
        np.testing.assert_array_equal(w1, w2)
        assert [r.primal for r in t1] == [r.primal for r in t2]

    def test_sdca_beats_sgd_at_small_lambda_smoothed_hinge(self):
        # Qualitative benchmark: 20 epochs at lambda=1e-5, median over 5 seeds.
        ds = classification_dataset(500, 50, seed=28)
        loss = make_loss("smoothed-hinge", 1.0)
        sdca_p, sgd_p = [], []
        for seed in range(5):
            cfg = SolverConfig(loss=loss, lam=1e-5, epochs=20, output="final",
                               seed=seed, gap_every=20)
            sdca_p.append(solve(cfg, ds).trace[-1].primal)
            _, trace = run_sgd_baseline(cfg, ds)
            sgd_p.append(trace[-1].primal)
        assert np.median(sdca_p) <= np.median(sgd_p)


class TestDualityGap:
    def test_zero_alpha_hinge(self):
        ds = classification_dataset(50, 8, seed=21)
        state = SolverState(alpha=np.zeros(ds.n), w=np.zeros(ds.dim))
        assert duality_gap(make_loss("hinge"), 1e-2, ds, state) == pytest.approx(1.0)

    def test_toy_optimum(self):
        state = SolverState(alpha=np.array([1.0]), w=np.array([1.0]))
        assert duality_gap(make_loss("hinge"), 1.0, TOY, state) == 0.0

    def test_weak_duality_random_alpha(self):
        ds = regression_dataset(60, 8, seed=22)
        rng = np.random.default_rng(1)
        loss = make_loss("absdev")
        for _ in range(50):
            alpha = rng.uniform(-1.0, 1.0, size=ds.n)
            state = SolverState(alpha=alpha, w=w_of_alpha(0.05, ds, alpha))
            assert duality_gap(loss, 0.05, ds, state) >= -1e-10

    def test_rebuilds_drifted_w(self):
        ds = classification_dataset(30, 5, seed=23)
        alpha = np.full(ds.n, 0.5) * ds.labels
        state = SolverState(alpha=alpha,
                            w=w_of_alpha(0.1, ds, alpha) + 1e-3)
        duality_gap(make_loss("hinge"), 0.1, ds, state)
        np.testing.assert_allclose(state.w, w_of_alpha(0.1, ds, alpha))

    def test_converged_solutions_match_sklearn(self):
        # Cross-library oracle on the same objectives: ridge with
        # alpha = n lam / 2 and logistic regression with C = 1/(n lam),
        # both without intercept.
        from sklearn.linear_model import LogisticRegression, Ridge

        lam = 1e-2
        ds = regression_dataset(150, 8, seed=30)
        X = ds.matrix().toarray()
        cfg = SolverConfig(loss=make_loss("squared"), lam=lam, epochs=3000,
                           output="final", seed=0, stop_gap=1e-12, gap_every=10)
        res = solve(cfg, ds)
        ridge = Ridge(alpha=ds.n * lam / 2, fit_intercept=False).fit(X, ds.labels)
        np.testing.assert_allclose(res.w_final, ridge.coef_, atol=1e-5)

        ds = classification_dataset(150, 8, seed=31)
        X = ds.matrix().toarray()
        cfg = SolverConfig(loss=make_loss("logistic"), lam=lam, epochs=5000,
                           output="final", seed=0, stop_gap=1e-13, gap_every=50)
        res = solve(cfg, ds)
        lr = LogisticRegression(C=1 / (ds.n * lam), fit_intercept=False,
                                tol=1e-12, max_iter=10000).fit(X, ds.labels)
        np.testing.assert_allclose(res.w_final, lr.coef_.ravel(), atol=1e-6)

    def test_dual_bounded_above_by_initial_primal(self):
        # With phi(0) <= 1 (guaranteed here by |y| <= 1), D never exceeds
        # P(0) <= 1 along any trajectory.
        for name, ds in (("hinge", classification_dataset(100, 10, seed=24)),
                         ("logistic", classification_dataset(100, 10, seed=25)),
                         ("squared", regression_dataset(100, 10, seed=26)),
                         ("absdev", regression_dataset(100, 10, seed=27))):
            loss = make_loss(name)
            cfg = SolverConfig(loss=loss, lam=1e-2, epochs=5, output="final",
                               seed=0)
            res = solve(cfg, ds)
            p0 = primal_objective(loss, 1e-2, ds, np.zeros(ds.dim))
            assert p0 <= 1.0 + 1e-12
            assert all(r.dual <= p0 + 1e-10 for r in res.trace)
            assert all(r.dual <= 1.0 + 1e-10 for r in res.trace)
