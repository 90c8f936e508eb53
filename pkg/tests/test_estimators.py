import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from reverse_sobolev import quadform
from reverse_sobolev.estimators import BubbleDecomposition, StabilityQuotient
from reverse_sobolev.exceptions import InvalidParameterError
from reverse_sobolev.field import HarmonicField, coordinate
from reverse_sobolev.specialfn import SpectralParams, alpha
from reverse_sobolev.stability import zonal_harmonic


@pytest.fixture
def u():
    return zonal_harmonic(2, 2) * 0.05 + 1.0


def test_params_roundtrip():
    est = BubbleDecomposition(n=2, s=2.5, budget=3, seed=9)
    assert est.get_params() == {"n": 2, "s": 2.5, "budget": 3, "seed": 9}
    est.set_params(s=1.5)
    assert est.s == 1.5
    c = clone(est)
    assert c.get_params() == est.get_params() and c is not est
    assert "BubbleDecomposition" in repr(est)


def test_not_fitted(u):
    with pytest.raises(NotFittedError):
        BubbleDecomposition().transform(u)
    with pytest.raises(NotFittedError):
        StabilityQuotient().predict()


def test_fit_transform_gives_remainder(u):
    P = SpectralParams(2, 2.5)
    est = BubbleDecomposition(n=2, s=2.5, budget=2)
    rho = est.fit_transform(u)
    assert est.distance_ == pytest.approx(0.05 ** 2 * alpha(P, 2), rel=1e-8)
    assert est.n_critical_points_ >= 1
    assert est.c_ == pytest.approx(1.0)
    assert quadform.a2s(rho, P)[0] == pytest.approx(est.distance_, rel=1e-8)


def test_stability_quotient_predict(u):
    est = StabilityQuotient(n=2, s=2.5, budget=2, check_invariance=False)
    q = est.fit(u).predict()
    assert q == pytest.approx(10 / 9, rel=0.01)
    assert est.report_.quotient == q
    q2 = est.predict(HarmonicField.from_terms(2, [(3, 0, 0.02)], offset=1.0))
    assert q2 != q


@pytest.mark.parametrize("kw", [dict(n=2, s=2.0), dict(n=2.5, s=1.5), dict(n=2, s="x"),
                                dict(budget=-1), dict(budget=1.5), dict(seed=-3)])
def test_invalid_hyperparameters(u, kw):
    with pytest.raises(InvalidParameterError):
        BubbleDecomposition(**kw).fit(u)


def test_invalid_inputs(u):
    est = BubbleDecomposition(n=1, s=0.75)
    with pytest.raises(InvalidParameterError):
        est.fit(u)
    with pytest.raises(InvalidParameterError):
        est.fit(np.ones(10))
    with pytest.raises(InvalidParameterError):
        BubbleDecomposition().fit(coordinate(2, 0))
