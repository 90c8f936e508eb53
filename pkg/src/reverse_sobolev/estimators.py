"""Estimator-style wrappers: configure with hyperparameters, fit on one field."""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import decompose, stability
from .conformal import bubble_eval
from .validation import check_field, check_params, check_positive_int, check_seed


class _FieldEstimator(BaseEstimator):
    def _params(self):
        return check_params(self.n, self.s)

    def _check_fitted(self, attr):
        if not hasattr(self, attr):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")


class BubbleDecomposition(_FieldEstimator):
    """Decompose u = c v_zeta + rho with rho orthogonal to the tangent space.

    Parameters
    ----------
    n, s : int, float
        Dimension and order.
    budget : int
        Number of random restarts on top of the deterministic starts.
    seed : int
        Seed for the random restarts.

    Attributes
    ----------
    critical_points_ : CriticalPointSet
    distance_ : float
        d(u), the least remainder energy.
    c_, zeta_ : float, ndarray
        The attaining bubble (canonically first if several attain).
    """

    def __init__(self, n=2, s=1.5, budget=16, seed=0):
        self.n = n
        self.s = s
        self.budget = budget
        self.seed = seed

    def fit(self, u, y=None):
        params = self._params()
        check_field(u, params)
        budget = check_positive_int(self.budget, "budget", minimum=0)
        res = decompose.distance(u, params, budget, check_seed(self.seed))
        self.result_ = res
        self.critical_points_ = res.critical_points
        self.distance_ = res.value
        self.c_ = res.argmin.c
        self.zeta_ = res.argmin.zeta
        self.n_critical_points_ = len(res.critical_points)
        return self

    def transform(self, u):
        """The remainder u - c v_zeta for the fitted bubble."""
        self._check_fitted("result_")
        return u - bubble_eval(self.result_.argmin.bubble)

    def fit_transform(self, u, y=None):
        return self.fit(u).transform(u)


class StabilityQuotient(_FieldEstimator):
    """E(u) = deficit / d(u) for one positive field.

    ``predict`` returns the quotient; ``report_`` keeps the full report.
    """

    def __init__(self, n=2, s=1.5, budget=16, seed=0, check_invariance=True):
        self.n = n
        self.s = s
        self.budget = budget
        self.seed = seed
        self.check_invariance = check_invariance

    def fit(self, u, y=None):
        params = self._params()
        check_field(u, params)
        self.report_ = stability.quotient(
            u, params, check_positive_int(self.budget, "budget", minimum=0),
            check_seed(self.seed), bool(self.check_invariance))
        self.quotient_ = self.report_.quotient
        return self

    def predict(self, u=None):
        """Quotient of ``u`` (refits) or of the fitted field when ``u`` is None."""
        if u is not None:
            self.fit(u)
        self._check_fitted("report_")
        return self.quotient_
