"""Iteration-count bounds and refined diagnostics for trace/theory overlays.

Evaluates, numerically, the sufficient iteration counts under which the
solver's expected duality gap (or dual suboptimality) provably drops below a
target, so measured traces can be compared against theory:

  * Lipschitz losses: T0 + n + C L^2/(lambda eps) iterations for a gap of
    eps, where C is 4 generically and 1 for the hinge (whose dual domain is
    one-sided).
  * (1/gamma)-smooth losses: (n + 1/(lambda gamma)) log((n + 1/(lambda
    gamma))/eps), i.e. linear convergence.
  * SGD warm start: one greedy pass leaves dual suboptimality at most
    2 L^2 log(e n)/(lambda n) in expectation over iid samples.
  * Refined (almost-everywhere-smooth) analysis: driven by the per-example
    local strong-convexity moduli gamma_i of the dual at the optimum, their
    sub-threshold counts N(u), and the top eigenvalue rho of the empirical
    second-moment matrix.

All logarithms are natural. Iteration counts are rounded up (the bounds are
sufficient conditions). The inf/sup over the refined analysis' auxiliary
variables are taken on geometric grids, which unit tests validate against
finer grids and exhaustive scans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .losses import Loss

S_GRID_POINTS = 1024
GAMMA_GRID_POINTS = 2048
POWER_ITER_TOL = 1e-8
POWER_ITER_CAP = 10000


@dataclass
class BoundInputs:
    """Arguments shared by the iteration-count evaluators.

    Exactly one of ``lipschitz`` / ``gamma_smooth`` is consulted per bound
    (gamma_smooth is 1/smoothness of the loss). ``hinge_constants`` selects
    the tightened constant available for the hinge loss.
    """

    n: int
    lam: float
    eps_p: float
    lipschitz: float = None
    gamma_smooth: float = None
    hinge_constants: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if not self.eps_p > 0:
            raise ValueError("target accuracy must be > 0")
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise ValueError("lipschitz constant must be > 0")
        if self.gamma_smooth is not None and not self.gamma_smooth > 0:
            raise ValueError("gamma_smooth must be > 0")


def _require(value, name):
    if value is None:
        raise ValueError(f"{name} must be provided for this bound")
    return float(value)


def lipschitz_iteration_bound(b: BoundInputs):
    """(T0, T) sufficient for an expected duality gap of eps_p, Lipschitz case.

    T0 = max(0, ceil(n log(0.5 lambda n / L^2))) burns in the dual; the gap
    phase adds n + C L^2/(lambda eps_p) with C = 1 under hinge constants,
    else 4.
    """
    L = _require(b.lipschitz, "lipschitz")
    t0 = max(0, math.ceil(b.n * math.log(0.5 * b.lam * b.n / (L * L))))
    c = 1.0 if b.hinge_constants else 4.0
    t = t0 + b.n + math.ceil(c * L * L / (b.lam * b.eps_p))
    return t0, t


def smooth_iteration_bound(b: BoundInputs):
    """T sufficient for an expected duality gap of eps_p, smooth case."""
    gamma = _require(b.gamma_smooth, "gamma_smooth")
    base = b.n + 1.0 / (b.lam * gamma)
    if b.eps_p >= base:
        return 0
    return math.ceil(base * math.log(base / b.eps_p))


def sgd_warmstart_dual_bound(n, lipschitz, lam):
    """Expected dual suboptimality after the one-pass greedy warm start."""
    return 2.0 * lipschitz * lipschitz * (1.0 + math.log(n)) / (lam * n)


def warmstart_iteration_bound(b: BoundInputs):
    """(T0, T) for SDCA after the SGD warm start; the burn-in shrinks to
    ceil(n log log(e n))."""
    L = _require(b.lipschitz, "lipschitz")
    t0 = math.ceil(b.n * math.log(math.log(math.e * b.n)))
    c = 1.0 if b.hinge_constants else 4.0
    t = t0 + b.n + math.ceil(c * L * L / (b.lam * b.eps_p))
    return t0, t


def dual_strong_convexity_moduli(loss: Loss, dataset: Dataset, w_ref):
    """Per-example local strong-convexity moduli of the dual at w_ref.

    hinge: |w.x_i * y_i - 1|; absolute deviation: |w.x_i - y_i|. w_ref should
    be a high-precision solution; the moduli are defined at the optimum.
    """
    margins = dataset.margins(w_ref)
    if loss.name == "hinge":
        return np.abs(margins * dataset.labels - 1.0)
    if loss.name == "absdev":
        return np.abs(margins - dataset.labels)
    raise ValueError(f"moduli are only defined for hinge/absdev, not {loss.name!r}")


def count_below(gammas, u):
    """#{i : gamma_i < u} (strict), via binary search on the sorted vector."""
    gammas = np.sort(np.asarray(gammas, dtype=np.float64))
    return int(np.searchsorted(gammas, u, side="left"))


@dataclass
class RefinedDiagnostics:
    """Sorted moduli plus the top second-moment eigenvalue."""

    gammas_sorted: np.ndarray
    rho: float
    rho_converged: bool

    @property
    def n(self):
        return int(self.gammas_sorted.size)

    def count_below(self, u):
        return int(np.searchsorted(self.gammas_sorted, u, side="left"))


def refined_diagnostics(loss: Loss, dataset: Dataset, w_ref) -> RefinedDiagnostics:
    gammas = np.sort(dual_strong_convexity_moduli(loss, dataset, w_ref))
    rho, converged = second_moment_top_eigenvalue(dataset)
    return RefinedDiagnostics(gammas, rho, converged)


def refined_dual_iteration_bound(n, lam, lipschitz, gammas, eps_d,
                                 grid_points=S_GRID_POINTS):
    """Iterations sufficient for dual suboptimality eps_d under the moduli.

    Picks the largest step-size fraction s in (0, 1] on a geometric grid
    (starting at 1/grid_points) with
        eps_d >= 8 L^2 (s/(lambda n)) N(s/(lambda n)) / n,
    and returns ceil(2 (n/s) log(2/eps_d)); None when no grid point
    qualifies.
    """
    gammas = np.sort(np.asarray(gammas, dtype=np.float64))
    L2 = float(lipschitz) ** 2
    grid = np.geomspace(1.0 / grid_points, 1.0, grid_points)
    thresholds = grid / (lam * n)
    counts = np.searchsorted(gammas, thresholds, side="left")
    ok = eps_d >= 8.0 * L2 * thresholds * counts / n
    if not ok.any():
        return None
    s = float(grid[np.flatnonzero(ok)[-1]])
    return math.ceil(2.0 * (n / s) * math.log(2.0 / eps_d))


def second_moment_top_eigenvalue(dataset: Dataset):
    """Top eigenvalue of (1/n) sum_i x_i x_i^T by power iteration.

    Runs on the implicit operator v -> (1/n) X^T (X v) to 1e-8 relative
    tolerance (cap 10000 iterations); returns (estimate, converged).
    """
    X = dataset.matrix()
    n, dim = X.shape
    rng = np.random.default_rng(0)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    eig = 0.0
    for _ in range(POWER_ITER_CAP):
        u = X.T.dot(X.dot(v)) / n
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.0, True
        new_eig = float(np.dot(v, u))
        v = u / norm
        if abs(new_eig - eig) <= POWER_ITER_TOL * max(abs(new_eig), 1e-30):
            return new_eig, True
        eig = new_eig
    return eig, False


def refined_primal_residual(gammas, lam, rho, lipschitz, eps_d,
                            grid_points=GAMMA_GRID_POINTS):
    """inf over gamma > 0 of N(gamma)/n * 4 L^2 + 2 eps_d / min(gamma,
    lambda gamma^2/(2 rho)), on a geometric grid spanning
    [1e-8, max gamma_i + 1]."""
    gammas = np.sort(np.asarray(gammas, dtype=np.float64))
    n = gammas.size
    L2 = float(lipschitz) ** 2
    grid = np.geomspace(1e-8, float(gammas[-1]) + 1.0, grid_points)
    counts = np.searchsorted(gammas, grid, side="left")
    denom = np.minimum(grid, lam * grid * grid / (2.0 * rho))
    values = (counts / n) * 4.0 * L2 + 2.0 * eps_d / denom
    return float(values.min())


def refined_gap_bound(eps_d, residual, lam, t0):
    """Expected duality gap at T = 2 T0 implied by dual suboptimality eps_d
    at T0 and the refined primal residual."""
    return eps_d + residual / (2.0 * lam * t0)


def gap_bound_curve(loss: Loss, n, lam, t, hinge_constants=None):
    """Sufficient upper bound on the expected duality gap after t iterations.

    Smooth losses: (n + 1/(lambda gamma)) exp(-t / (n + 1/(lambda gamma))).
    Lipschitz losses: evaluated at T0 = t/2 when the burn-in and window
    conditions hold, else None. Used as the per-epoch trace overlay.
    """
    if loss.smoothness is not None:
        base = n + loss.smoothness / lam
        return float(base * math.exp(-t / base))
    if loss.lipschitz is None:
        return None
    if hinge_constants is None:
        hinge_constants = loss.name == "hinge"
    L2 = loss.lipschitz ** 2
    G = L2 if hinge_constants else 4.0 * L2
    t0_burn = max(0, math.ceil(n * math.log(2.0 * lam * n / G)))
    half = t / 2.0
    if half < t0_burn or half < n:
        return None
    return float(2.0 * G / (lam * (2.0 * n - t0_burn + half)) + G / (lam * t))
