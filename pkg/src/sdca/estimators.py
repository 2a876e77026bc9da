"""scikit-learn style estimators wrapping the dual coordinate-ascent solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import dataset_from_arrays, normalize_to_unit_ball
from .losses import make_loss
from .solver import SolverConfig, solve


class _BaseSDCA(BaseEstimator):
    def __init__(self, loss, lam=1e-3, gamma=1.0, epochs=20, schedule="perm",
                 init="zero", output="average", t0_fraction=0.5, stop_gap=None,
                 gap_every=1, normalize=True, random_state=0):
        self.loss = loss
        self.lam = lam
        self.gamma = gamma
        self.epochs = epochs
        self.schedule = schedule
        self.init = init
        self.output = output
        self.t0_fraction = t0_fraction
        self.stop_gap = stop_gap
        self.gap_every = gap_every
        self.normalize = normalize
        self.random_state = random_state

    def _solve(self, X, y):
        dataset = dataset_from_arrays(X, y)
        scale = 1.0
        if self.normalize:
            dataset, scale = normalize_to_unit_ball(dataset)
        config = SolverConfig(
            loss=make_loss(self.loss, self.gamma),
            lam=self.lam,
            schedule=self.schedule,
            init=self.init,
            epochs=self.epochs,
            t0_fraction=self.t0_fraction,
            output=self.output,
            stop_gap=self.stop_gap,
            seed=self.random_state,
            gap_every=self.gap_every,
        )
        result = solve(config, dataset)
        self.scale_ = scale
        self.dual_coef_ = result.alpha
        # Fold the training-time feature scaling into the coefficients so
        # decision_function applies to raw inputs. The model has no bias term.
        coef = np.zeros(X.shape[1])
        coef[: result.w.shape[0]] = result.w
        self.coef_ = coef / scale
        self.intercept_ = 0.0
        self.n_features_in_ = X.shape[1]
        self.gap_ = result.final_gap
        self.trace_ = result.trace
        self.n_iter_ = result.trace[-1].epoch
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, accept_sparse="csr")
        if X.shape[1] != self.coef_.shape[0]:
            raise ValueError(
                f"X has {X.shape[1]} features; expected {self.coef_.shape[0]}"
            )
        return np.asarray(X @ self.coef_).ravel()


class SDCAClassifier(_BaseSDCA, ClassifierMixin):
    """Linear binary classifier trained by stochastic dual coordinate ascent.

    Minimizes the average loss over margins plus an L2 ridge penalty of
    strength lam. Training stops after `epochs` passes or as soon as the
    duality gap certifies `stop_gap` suboptimality.

    Parameters mirror SolverConfig; `normalize=True` rescales features by one
    global constant so max ||x_i|| <= 1 (the regime the convergence
    guarantees assume) and folds the scale back into coef_.
    """

    def __init__(self, loss="smoothed-hinge", lam=1e-3, gamma=1.0, epochs=20,
                 schedule="perm", init="zero", output="average",
                 t0_fraction=0.5, stop_gap=None, gap_every=1, normalize=True,
                 random_state=0):
        super().__init__(loss=loss, lam=lam, gamma=gamma, epochs=epochs,
                         schedule=schedule, init=init, output=output,
                         t0_fraction=t0_fraction, stop_gap=stop_gap,
                         gap_every=gap_every, normalize=normalize,
                         random_state=random_state)

    def fit(self, X, y):
        X, y = check_X_y(X, y, accept_sparse="csr")
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] != 2:
            raise ValueError(
                f"expected exactly 2 classes, got {self.classes_.shape[0]}"
            )
        signed = np.where(y == self.classes_[1], 1.0, -1.0)
        return self._solve(X, signed)

    def predict(self, X):
        margins = self.decision_function(X)
        return np.where(margins > 0, self.classes_[1], self.classes_[0])


class SDCARegressor(_BaseSDCA, RegressorMixin):
    """Linear regressor trained by stochastic dual coordinate ascent.

    `loss="squared"` gives ridge regression; `loss="absdev"` gives
    L2-regularized least absolute deviation.
    """

    def __init__(self, loss="squared", lam=1e-3, gamma=1.0, epochs=20,
                 schedule="perm", init="zero", output="average",
                 t0_fraction=0.5, stop_gap=None, gap_every=1, normalize=True,
                 random_state=0):
        super().__init__(loss=loss, lam=lam, gamma=gamma, epochs=epochs,
                         schedule=schedule, init=init, output=output,
                         t0_fraction=t0_fraction, stop_gap=stop_gap,
                         gap_every=gap_every, normalize=normalize,
                         random_state=random_state)

    def fit(self, X, y):
        X, y = check_X_y(X, y, accept_sparse="csr", y_numeric=True)
        return self._solve(X, np.asarray(y, dtype=np.float64))

    def predict(self, X):
        return self.decision_function(X)
