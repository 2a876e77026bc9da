"""Loss families for regularized linear prediction.

Each loss knows its primal value, convex conjugate, a subgradient, its
Lipschitz/smoothness constants, and how to exactly maximize the dual
objective over a single coordinate:

    maximize_b  -conj(b) - (lambda n / 2) ||w + (lambda n)^-1 (b - a) x||^2

which, dropping constants, is

    h(b) = -conj(b) - (b - a) * (x.w) - (b - a)^2 ||x||^2 / (2 lambda n).

Classification losses (hinge, smoothed hinge, logistic) constrain the dual
variable b to b*y in [0, 1]; absolute deviation constrains b to [-1, 1];
squared loss is unconstrained. An infeasible conjugate argument is reported
as +inf, not an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

# Slack for feasibility checks: absorbs rounding dust from averaging sums
# without admitting genuinely infeasible duals.
FEAS_TOL = 1e-9

# Domain clamp for the logistic dual, whose entropy terms have infinite
# slope at the boundary.
LOGISTIC_DOMAIN_EPS = 1e-12
LOGISTIC_GRAD_TOL = 1e-12
LOGISTIC_MAX_NEWTON = 50


@dataclass
class CoordinateProblem:
    """Arguments of one single-coordinate dual maximization step."""

    alpha_i: float
    wx: float
    norm_sq: float
    lambda_n: float
    label: float

    def __post_init__(self):
        if not self.lambda_n > 0.0:
            raise ValueError(f"lambda_n must be > 0, got {self.lambda_n}")
        if self.norm_sq < 0.0:
            raise ValueError(f"norm_sq must be >= 0, got {self.norm_sq}")


class Loss:
    """Base class; subclasses fill in the per-family formulas."""

    name = ""
    binary_labels = False
    lipschitz = None   # L such that |phi(a) - phi(b)| <= L|a - b|, or None
    smoothness = None  # M such that phi' is M-Lipschitz, or None

    def primal(self, a, y):
        """phi(a) for label y; accepts scalars or arrays."""
        raise NotImplementedError

    def conjugate(self, alpha, y):
        """phi*(-alpha) for label y; +inf when alpha is outside the dual domain."""
        raise NotImplementedError

    def subgradient(self, a, y):
        """One element of the subdifferential of phi at a (deterministic at kinks)."""
        raise NotImplementedError

    def coordinate_update(self, p: CoordinateProblem) -> float:
        """The dual step delta maximizing h(alpha_i + delta); exact per family."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


def _check_box(p, lo, hi, what):
    if p < lo - FEAS_TOL or p > hi + FEAS_TOL:
        raise ValueError(f"infeasible dual variable: {what}={p} outside [{lo}, {hi}]")
    return min(max(p, lo), hi)


def _clipped_target(numerator, q, current):
    # Limit of clip(numerator / q + current) as q -> 0 follows the sign of
    # the numerator; empty rows (q = 0) land here.
    if q > 0.0:
        return numerator / q + current
    if numerator > 0.0:
        return math.inf
    if numerator < 0.0:
        return -math.inf
    return current


class HingeLoss(Loss):
    """max(0, 1 - y a); conjugate -(alpha y) on alpha y in [0, 1]."""

    name = "hinge"
    binary_labels = True
    lipschitz = 1.0

    def primal(self, a, y):
        return np.maximum(0.0, 1.0 - np.asarray(y) * a)

    def conjugate(self, alpha, y):
        p = np.asarray(alpha, dtype=np.float64) * y
        feas = (p >= -FEAS_TOL) & (p <= 1.0 + FEAS_TOL)
        return np.where(feas, -np.clip(p, 0.0, 1.0), np.inf)

    def subgradient(self, a, y):
        y = np.asarray(y, dtype=np.float64)
        return np.where(y * a < 1.0, -y, 0.0)

    def coordinate_update(self, p):
        y = p.label
        pa = _check_box(p.alpha_i * y, 0.0, 1.0, "alpha*y")
        q = p.norm_sq / p.lambda_n
        target = _clipped_target(1.0 - p.wx * y, q, pa)
        target = min(max(target, 0.0), 1.0)
        return y * target - p.alpha_i


class SmoothedHingeLoss(Loss):
    """Hinge with a quadratic zone of width gamma.

    Obtained by adding (gamma/2) a^2 to the hinge conjugate, which makes the
    primal (1/gamma)-smooth:

        phi(x) = 0                        if x > 1
                 1 - x - gamma/2          if x < 1 - gamma
                 (1 - x)^2 / (2 gamma)    otherwise,   x = y a.
    """

    name = "smoothed-hinge"
    binary_labels = True

    def __init__(self, gamma=1.0):
        if not gamma > 0:
            raise ValueError("smoothing gamma must be > 0")
        self.gamma = float(gamma)

    @property
    def smoothness(self):
        return 1.0 / self.gamma

    def primal(self, a, y):
        x = np.asarray(y) * a
        g = self.gamma
        return np.where(
            x > 1.0, 0.0,
            np.where(x < 1.0 - g, 1.0 - x - 0.5 * g, (1.0 - x) ** 2 / (2.0 * g)),
        )

    def conjugate(self, alpha, y):
        # Written as hinge conjugate plus (gamma/2) alpha^2 with this exact
        # grouping so the shift identity holds bitwise.
        alpha = np.asarray(alpha, dtype=np.float64)
        p = alpha * y
        feas = (p >= -FEAS_TOL) & (p <= 1.0 + FEAS_TOL)
        pc = np.clip(p, 0.0, 1.0)
        return np.where(feas, -pc + 0.5 * self.gamma * (pc * pc), np.inf)

    def subgradient(self, a, y):
        y = np.asarray(y, dtype=np.float64)
        x = y * a
        g = self.gamma
        return np.where(x > 1.0, 0.0, np.where(x < 1.0 - g, -y, -y * (1.0 - x) / g))

    def coordinate_update(self, p):
        y = p.label
        pa = _check_box(p.alpha_i * y, 0.0, 1.0, "alpha*y")
        q = p.norm_sq / p.lambda_n
        target = (1.0 - p.wx * y - self.gamma * pa) / (q + self.gamma) + pa
        target = min(max(target, 0.0), 1.0)
        return y * target - p.alpha_i

    def __repr__(self):
        return f"SmoothedHingeLoss(gamma={self.gamma})"


class AbsoluteDeviationLoss(Loss):
    """|a - y|; conjugate -(alpha y) on alpha in [-1, 1]."""

    name = "absdev"
    lipschitz = 1.0

    def primal(self, a, y):
        return np.abs(np.asarray(a, dtype=np.float64) - y)

    def conjugate(self, alpha, y):
        alpha = np.asarray(alpha, dtype=np.float64)
        feas = (alpha >= -1.0 - FEAS_TOL) & (alpha <= 1.0 + FEAS_TOL)
        return np.where(feas, -np.clip(alpha, -1.0, 1.0) * y, np.inf)

    def subgradient(self, a, y):
        return np.sign(np.asarray(a, dtype=np.float64) - y)

    def coordinate_update(self, p):
        a = _check_box(p.alpha_i, -1.0, 1.0, "alpha")
        q = p.norm_sq / p.lambda_n
        target = _clipped_target(p.label - p.wx, q, a)
        target = min(max(target, -1.0), 1.0)
        return target - p.alpha_i


class SquaredLoss(Loss):
    """(a - y)^2; conjugate -(alpha y) + alpha^2/4, unconstrained.

    The second derivative is identically 2, so the smoothness constant is 2.
    """

    name = "squared"
    smoothness = 2.0

    def primal(self, a, y):
        d = np.asarray(a, dtype=np.float64) - y
        return d * d

    def conjugate(self, alpha, y):
        alpha = np.asarray(alpha, dtype=np.float64)
        return -alpha * y + 0.25 * alpha * alpha

    def subgradient(self, a, y):
        return 2.0 * (np.asarray(a, dtype=np.float64) - y)

    def coordinate_update(self, p):
        q = p.norm_sq / p.lambda_n
        return (p.label - p.wx - 0.5 * p.alpha_i) / (0.5 + q)


class LogisticLoss(Loss):
    """log(1 + exp(-y a)); conjugate is the binary entropy of p = alpha y in [0, 1].

    The coordinate step has no closed form: it starts from the approximate
    solution (sigmoid pull scaled by max(1, 1/4 + ||x||^2/(lambda n))) and
    polishes with safeguarded Newton on the concave dual coordinate objective,
    bisecting whenever a Newton step leaves the current bracket.
    """

    name = "logistic"
    binary_labels = True
    smoothness = 1.0

    def primal(self, a, y):
        return np.logaddexp(0.0, -np.asarray(y) * a)

    def conjugate(self, alpha, y):
        p = np.asarray(alpha, dtype=np.float64) * y
        feas = (p >= -FEAS_TOL) & (p <= 1.0 + FEAS_TOL)
        pc = np.clip(p, 0.0, 1.0)
        return np.where(feas, xlogy(pc, pc) + xlogy(1.0 - pc, 1.0 - pc), np.inf)

    def subgradient(self, a, y):
        y = np.asarray(y, dtype=np.float64)
        return -y * expit(-y * a)

    def coordinate_update(self, p):
        y = p.label
        p0 = _check_box(p.alpha_i * y, 0.0, 1.0, "alpha*y")
        q = p.norm_sq / p.lambda_n
        ywx = p.wx * y
        eps = LOGISTIC_DOMAIN_EPS
        lo, hi = eps, 1.0 - eps

        # Gradient of h in terms of p = b*y; h is strictly concave.
        def grad(pp):
            return -math.log(pp / (1.0 - pp)) - ywx - q * (pp - p0)

        g_lo = grad(lo)
        if g_lo <= 0.0:
            return y * lo - p.alpha_i
        g_hi = grad(hi)
        if g_hi >= 0.0:
            return y * hi - p.alpha_i

        sig = expit(-ywx)
        pp = p0 + (sig - p0) / max(1.0, 0.25 + q)
        pp = min(max(pp, lo), hi)
        for _ in range(LOGISTIC_MAX_NEWTON):
            g = grad(pp)
            if abs(g) < LOGISTIC_GRAD_TOL:
                break
            if g > 0.0:
                lo = pp
            else:
                hi = pp
            curv = -1.0 / (pp * (1.0 - pp)) - q
            step = pp - g / curv
            if not (lo < step < hi):
                step = 0.5 * (lo + hi)
            if step == pp:
                break
            pp = step
        return y * pp - p.alpha_i


_LOSSES = {
    "hinge": HingeLoss,
    "smoothed-hinge": SmoothedHingeLoss,
    "absdev": AbsoluteDeviationLoss,
    "squared": SquaredLoss,
    "logistic": LogisticLoss,
}

LOSS_NAMES = tuple(_LOSSES)


def make_loss(name, gamma=1.0) -> Loss:
    """Build a loss from its CLI name; gamma applies to smoothed-hinge only."""
    try:
        cls = _LOSSES[name]
    except KeyError:
        raise ValueError(
            f"unknown loss {name!r}; expected one of {', '.join(_LOSSES)}"
        ) from None
    if cls is SmoothedHingeLoss:
        return cls(gamma)
    return cls()
