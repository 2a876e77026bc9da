"""SDCA training loop with schedule variants, SGD warm start, and tracing.

The primal problem is

    P(w) = (1/n) sum_i phi_i(w . x_i) + (lambda/2) ||w||^2

and its dual, with one variable per example,

    D(alpha) = (1/n) sum_i -phi_i*(-alpha_i) - (lambda/2) ||w(alpha)||^2,
    w(alpha) = (1/(lambda n)) sum_i alpha_i x_i.

Each step picks an example and exactly maximizes D over that one dual
coordinate, updating w incrementally. P(w(alpha)) - D(alpha) >= 0 upper-bounds
the primal suboptimality and is the stopping criterion.

Randomness comes from one seed split into four independent substreams:
0 index draws, 1 permutations, 2 random-iterate pick, 3 warm-start shuffle.
The substreams are always spawned in this order, so e.g. changing the init
mode never shifts the index draws.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .losses import CoordinateProblem, Loss

SCHEDULES = ("random", "perm", "cyclic")
INITS = ("zero", "sgd")
OUTPUTS = ("average", "random", "final")

# Max tolerated per-coordinate discrepancy between the incrementally updated
# w and (1/lambda n) sum alpha_i x_i before w is rebuilt from alpha.
W_DRIFT_TOL = 1e-8


class ConfigError(ValueError):
    pass


@dataclass
class SolverConfig:
    """Run parameters. T = epochs * n unless total_steps overrides it.

    Averaging covers dual iterates strictly after step t0 (default T/2);
    total_steps/t0_steps exist so T need not be a multiple of n, which the
    iteration-count bounds generally are not.
    """

    loss: Loss
    lam: float
    schedule: str = "random"
    init: str = "zero"
    epochs: int = 10
    t0_fraction: float = 0.5
    output: str = "average"
    stop_gap: float = None
    seed: int = 0
    gap_every: int = 1
    total_steps: int = None
    t0_steps: int = None

    def validate(self, n=None):
        if not isinstance(self.loss, Loss):
            raise ConfigError(f"loss must be a Loss instance, got {self.loss!r}")
        if not self.lam > 0:
            raise ConfigError(f"lambda must be > 0, got {self.lam}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"schedule must be one of {SCHEDULES}")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}")
        if self.output not in OUTPUTS:
            raise ConfigError(f"output must be one of {OUTPUTS}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ConfigError(f"epochs must be a positive integer, got {self.epochs}")
        if not 0.0 <= self.t0_fraction < 1.0:
            raise ConfigError(f"t0_fraction must be in [0, 1), got {self.t0_fraction}")
        if self.stop_gap is not None and not self.stop_gap > 0:
            raise ConfigError(f"stop_gap must be > 0, got {self.stop_gap}")
        if int(self.gap_every) != self.gap_every or self.gap_every < 1:
            raise ConfigError(f"gap_every must be a positive integer, got {self.gap_every}")
        if self.total_steps is not None and self.total_steps < 1:
            raise ConfigError("total_steps must be >= 1")
        total = self.total_steps
        if n is not None and total is None:
            total = self.epochs * n
        if self.t0_steps is not None:
            if self.t0_steps < 0 or (total is not None and self.t0_steps >= total):
                raise ConfigError("t0_steps must satisfy 0 <= t0_steps < T")

    def resolve_horizon(self, n):
        """Total step count T and averaging start T0 for an n-example dataset."""
        total = self.total_steps if self.total_steps is not None else self.epochs * n
        if self.t0_steps is not None:
            t0 = self.t0_steps
        else:
            t0 = int(round(total * self.t0_fraction))
        return total, min(t0, total - 1)


@dataclass
class SolverState:
    """Mutable run state: dual vector, matched primal vector, counters."""

    alpha: np.ndarray
    w: np.ndarray
    t: int = 0
    dual_value: float = 0.0
    alpha_sum: np.ndarray = None
    w_sum: np.ndarray = None
    avg_count: int = 0


@dataclass
class TraceRecord:
    """One per-epoch metrics row."""

    epoch: int
    primal: float
    dual: float = None
    gap: float = None
    primal_subopt: float = None
    dual_subopt: float = None
    bound: float = None
    test_error: float = None
    wall_seconds: float = 0.0


@dataclass
class SolverResult:
    """Model per the configured output option, plus the raw final state."""

    w: np.ndarray
    alpha: np.ndarray
    trace: list
    steps_run: int
    stopped_early: bool
    w_final: np.ndarray
    alpha_final: np.ndarray
    final_gap: float


def w_of_alpha(lam, dataset: Dataset, alpha):
    """The primal vector (1/(lambda n)) sum_i alpha_i x_i."""
    alpha = np.asarray(alpha, dtype=np.float64)
    w = dataset.matrix().T.dot(alpha)
    w /= lam * dataset.n
    return w


def primal_objective(loss: Loss, lam, dataset: Dataset, w):
    margins = dataset.margins(w)
    return float(np.mean(loss.primal(margins, dataset.labels))
                 + 0.5 * lam * np.dot(w, w))


def dual_objective(loss: Loss, lam, dataset: Dataset, alpha, w=None):
    """D(alpha); raises if any coordinate is outside the conjugate domain."""
    alpha = np.asarray(alpha, dtype=np.float64)
    conj = loss.conjugate(alpha, dataset.labels)
    if np.any(np.isinf(conj)):
        bad = int(np.flatnonzero(np.isinf(conj))[0])
        raise ValueError(f"alpha[{bad}]={alpha[bad]} is dual-infeasible for {loss.name}")
    if w is None:
        w = w_of_alpha(lam, dataset, alpha)
    return float(-np.mean(conj) - 0.5 * lam * np.dot(w, w)) + 0.0


def duality_gap(loss: Loss, lam, dataset: Dataset, state: SolverState):
    """P(w(alpha)) - D(alpha) at a consistent (w, alpha) pair.

    w is rebuilt from alpha when the incremental copy has drifted beyond
    W_DRIFT_TOL; the rebuilt vector replaces state.w in that case.
    """
    _, _, gap = evaluate_state(loss, lam, dataset, state)
    return gap


def evaluate_state(loss: Loss, lam, dataset: Dataset, state: SolverState):
    """(primal, dual, gap) at w rebuilt from alpha; repairs drifted state.w."""
    w = w_of_alpha(lam, dataset, state.alpha)
    if np.max(np.abs(w - state.w), initial=0.0) > W_DRIFT_TOL:
        state.w = w
    p = primal_objective(loss, lam, dataset, w)
    d = dual_objective(loss, lam, dataset, state.alpha, w=w)
    return p, d, p - d


def sdca_step(state: SolverState, i, loss: Loss, lam, dataset: Dataset):
    """One exact coordinate-maximization step on example i; mutates state.

    Also advances state.dual_value by the exact dual improvement, which costs
    O(1) given the inner product already needed for the update.
    """
    cols, vals = dataset.row(i)
    wx = float(np.dot(vals, state.w[cols])) if cols.size else 0.0
    alpha_i = float(state.alpha[i])
    y = float(dataset.labels[i])
    lambda_n = lam * dataset.n
    delta = loss.coordinate_update(
        CoordinateProblem(alpha_i, wx, float(dataset.norms_sq[i]), lambda_n, y)
    )
    if delta != 0.0:
        new_alpha = alpha_i + delta
        state.alpha[i] = new_alpha
        scale = delta / lambda_n
        state.w[cols] += scale * vals
        conj_old = float(loss.conjugate(alpha_i, y))
        conj_new = float(loss.conjugate(new_alpha, y))
        dw_sq = 2.0 * scale * wx + scale * scale * float(dataset.norms_sq[i])
        state.dual_value += (conj_old - conj_new) / dataset.n - 0.5 * lam * dw_sq
    state.t += 1
    return state


def modified_sgd_epoch(loss: Loss, lam, dataset: Dataset, order):
    """One-pass warm start: greedily maximize the growing-prefix dual.

    At position t (1-based) the step maximizes
        -phi*(-a) - (lambda t / 2) ||w + (lambda t)^-1 a x||^2
    over a, i.e. a coordinate update with lambda_n = lambda * t from a = 0,
    then folds the result into w via the telescoping identity
        w_t = ((t-1) w_{t-1} + a_t x_t / lambda) / t.

    Returns the dual vector indexed by original example position.
    """
    n = dataset.n
    alpha = np.zeros(n)
    w = np.zeros(dataset.dim)
    for pos, i in enumerate(order, start=1):
        cols, vals = dataset.row(int(i))
        wx = float(np.dot(vals, w[cols])) if cols.size else 0.0
        a_t = loss.coordinate_update(
            CoordinateProblem(0.0, wx, float(dataset.norms_sq[i]), lam * pos,
                              float(dataset.labels[i]))
        )
        alpha[i] = a_t
        w *= (pos - 1) / pos
        if a_t != 0.0 and cols.size:
            w[cols] += (a_t / (lam * pos)) * vals
    return alpha


def _check_labels(loss: Loss, dataset: Dataset):
    if loss.binary_labels and not np.all(np.isin(dataset.labels, (-1.0, 1.0))):
        raise ConfigError(f"loss {loss.name!r} requires labels in {{-1, +1}}")


def _warn_if_unnormalized(dataset: Dataset):
    if dataset.max_norm > 1.0 + 1e-12:
        warnings.warn(
            f"max example norm {dataset.max_norm:.6g} exceeds 1; convergence "
            "guarantees assume ||x_i|| <= 1 (see normalize_to_unit_ball)",
            RuntimeWarning,
            stacklevel=3,
        )


def _substreams(seed):
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(c) for c in children)


def solve(config: SolverConfig, dataset: Dataset, step_callback=None,
          epoch_callback=None):
    """Run the configured coordinate-ascent variant on the dataset.

    step_callback(state, i, delta_alpha) fires after every step;
    epoch_callback(state, record) fires after every trace evaluation and may
    fill extra record fields (e.g. test error). On early stop before the
    averaging window opens, average/random outputs fall back to the final
    state.
    """
    config.validate(dataset.n)
    _check_labels(config.loss, dataset)
    _warn_if_unnormalized(dataset)
    loss, lam = config.loss, config.lam
    n = dataset.n
    total, t0 = config.resolve_horizon(n)
    rng_index, rng_perm, rng_pick, rng_shuffle = _substreams(config.seed)

    if config.init == "sgd":
        order = rng_shuffle.permutation(n)
        alpha = modified_sgd_epoch(loss, lam, dataset, order)
    else:
        alpha = np.zeros(n)
    state = SolverState(alpha=alpha, w=w_of_alpha(lam, dataset, alpha))
    state.dual_value = dual_objective(loss, lam, dataset, state.alpha, w=state.w)
    averaging = config.output == "average"
    if averaging:
        state.alpha_sum = np.zeros(n)
        state.w_sum = np.zeros(dataset.dim)
    pick_t = int(rng_pick.integers(t0 + 1, total + 1)) if config.output == "random" else None
    picked = None

    cyclic_order = rng_perm.permutation(n) if config.schedule == "cyclic" else None
    start = time.perf_counter()
    p, d, gap = evaluate_state(loss, lam, dataset, state)
    trace = [TraceRecord(epoch=0, primal=p, dual=d, gap=gap,
                         wall_seconds=time.perf_counter() - start)]
    if epoch_callback is not None:
        epoch_callback(state, trace[-1])
    stopped_early = config.stop_gap is not None and gap <= config.stop_gap

    n_epochs = math.ceil(total / n)
    for epoch in range(1, n_epochs + 1):
        if stopped_early:
            break
        if config.schedule == "random":
            block = rng_index.integers(0, n, size=n)
        elif config.schedule == "perm":
            block = rng_perm.permutation(n)
        else:
            block = cyclic_order
        if epoch == n_epochs and total - (epoch - 1) * n < n:
            block = block[: total - (epoch - 1) * n]
        for i in block:
            i = int(i)
            if averaging and state.t >= t0:
                state.alpha_sum += state.alpha
                state.w_sum += state.w
                state.avg_count += 1
            delta_before = float(state.alpha[i])
            sdca_step(state, i, loss, lam, dataset)
            if state.t == pick_t:
                picked = (state.alpha.copy(), state.w.copy())
            if step_callback is not None:
                step_callback(state, i, float(state.alpha[i]) - delta_before)
        if epoch % config.gap_every == 0 or epoch == n_epochs:
            p, d, gap = evaluate_state(loss, lam, dataset, state)
            trace.append(TraceRecord(epoch=epoch, primal=p, dual=d, gap=gap,
                                     wall_seconds=time.perf_counter() - start))
            if epoch_callback is not None:
                epoch_callback(state, trace[-1])
            if config.stop_gap is not None and gap <= config.stop_gap:
                stopped_early = epoch < n_epochs
                break

    if config.output == "average" and state.avg_count > 0:
        alpha_out = state.alpha_sum / state.avg_count
        w_out = w_of_alpha(lam, dataset, alpha_out)
    elif config.output == "random" and picked is not None:
        alpha_out, w_out = picked
    else:
        alpha_out, w_out = state.alpha.copy(), state.w.copy()

    return SolverResult(
        w=w_out,
        alpha=alpha_out,
        trace=trace,
        steps_run=state.t,
        stopped_early=stopped_early,
        w_final=state.w,
        alpha_final=state.alpha,
        final_gap=trace[-1].gap,
    )


def run_sdca(config: SolverConfig, dataset: Dataset, **kwargs):
    """SDCA proper: indices drawn uniformly with replacement."""
    return solve(replace(config, schedule="random"), dataset, **kwargs)


def run_sdca_perm(config: SolverConfig, dataset: Dataset, **kwargs):
    """SDCA-Perm: each epoch visits a fresh random permutation."""
    return solve(replace(config, schedule="perm"), dataset, **kwargs)


def run_cyclic(config: SolverConfig, dataset: Dataset, **kwargs):
    """Cyclic DCA: one random permutation drawn at start, reused every epoch."""
    return solve(replace(config, schedule="cyclic"), dataset, **kwargs)


def run_sdca_sgd_init(config: SolverConfig, dataset: Dataset, **kwargs):
    """Warm start with one modified-SGD pass, then run SDCA from its dual."""
    return solve(replace(config, init="sgd"), dataset, **kwargs)


def run_sgd_baseline(config: SolverConfig, dataset: Dataset, epoch_callback=None):
    """Plain stochastic subgradient baseline with step size 1/(lambda t):

        w_{t+1} = (1 - 1/t) w_t - (1/(lambda t)) phi'_i(w_t . x_i) x_i.

    Traces the primal objective per epoch; there is no dual to report.
    """
    config.validate(dataset.n)
    _check_labels(config.loss, dataset)
    _warn_if_unnormalized(dataset)
    loss, lam = config.loss, config.lam
    n = dataset.n
    total = config.total_steps if config.total_steps is not None else config.epochs * n
    rng_index = _substreams(config.seed)[0]
    w = np.zeros(dataset.dim)
    start = time.perf_counter()
    trace = [TraceRecord(epoch=0, primal=primal_objective(loss, lam, dataset, w),
                         wall_seconds=time.perf_counter() - start)]
    if epoch_callback is not None:
        epoch_callback(SolverState(alpha=None, w=w), trace[-1])
    t = 0
    n_epochs = math.ceil(total / n)
    for epoch in range(1, n_epochs + 1):
        block = rng_index.integers(0, n, size=min(n, total - t))
        for i in block:
            i = int(i)
            t += 1
            cols, vals = dataset.row(i)
            wx = float(np.dot(vals, w[cols])) if cols.size else 0.0
            g = float(loss.subgradient(wx, float(dataset.labels[i])))
            w *= 1.0 - 1.0 / t
            if g != 0.0 and cols.size:
                w[cols] -= (g / (lam * t)) * vals
        if epoch % config.gap_every == 0 or epoch == n_epochs:
            trace.append(TraceRecord(
                epoch=epoch, primal=primal_objective(loss, lam, dataset, w),
                wall_seconds=time.perf_counter() - start))
            if epoch_callback is not None:
                epoch_callback(SolverState(alpha=None, w=w), trace[-1])
    return w, trace
