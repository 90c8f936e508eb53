import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reverse_sobolev import conformal, quadform, sphere
from reverse_sobolev.conformal import Bubble, ConformalMap
from reverse_sobolev.exceptions import InvalidParameterError, PositivityError, TruncationError
from reverse_sobolev.field import HarmonicField, SphereField, constant, coordinate
from reverse_sobolev.specialfn import SpectralParams, alpha, alpha_table, sphere_area
from reverse_sobolev.verify import random_positive_field

seeds = st.integers(0, 2 ** 32 - 1)
matrix = st.sampled_from([SpectralParams(1, 0.75), SpectralParams(1, 2.0),
                          SpectralParams(2, 1.5), SpectralParams(2, 2.5)])


def test_a2s_of_expansion_is_exact(params):
    rng = np.random.default_rng(0)
    c = rng.standard_normal(sphere.basis_dimension(params.n, 5))
    h = HarmonicField(params.n, c)
    exact = float(alpha_table(params, 5) @ sphere.band_energies(params.n, c))
    val, diag = quadform.a2s(h, params)
    assert val == pytest.approx(exact, rel=1e-13)
    assert diag.converged and diag.tail_ratio == 0.0


def test_a2s_of_constant(params):
    val, _ = quadform.a2s(constant(params.n, 2.0), params)
    assert val == pytest.approx(4 * alpha(params, 0) * sphere_area(params.n), rel=1e-13)


def test_a2s_of_smooth_field_against_manual_sum():
    P = SpectralParams(2, 1.5)
    u = SphereField(2, lambda x: np.exp(0.3 * x[:, 0]), 8)
    val, diag = quadform.a2s(u, P)
    g = sphere.grid_for_degree(2, 80)
    ref = float(alpha_table(P, 40) @ sphere.spectrum(g, lambda x: np.exp(0.3 * x[:, 0]), 40))
    assert val == pytest.approx(ref, rel=1e-12)
    assert diag.monotone


def test_rough_field_raises_truncation():
    # |omega_3| has a kink; for s = 2.5 the a_2s series diverges
    P = SpectralParams(2, 2.5)
    u = SphereField(2, lambda x: 1.5 + np.abs(x[:, 2]), 8)
    with pytest.raises(TruncationError) as info:
        quadform.a2s(u, P)
    assert info.value.diagnostics is not None and not info.value.diagnostics.converged
    val, diag = quadform.a2s(u, P, strict=False)
    assert not diag.converged and diag.L == 256


def test_dimension_mismatch():
    with pytest.raises(InvalidParameterError):
        quadform.a2s(constant(1), SpectralParams(2, 1.5))
    with pytest.raises(InvalidParameterError):
        quadform.a2s_bilinear(constant(1), constant(2), SpectralParams(2, 1.5))


@settings(max_examples=15, deadline=None)
@given(seeds, matrix)
def test_polarization(seed, P):
    rng = np.random.default_rng(seed)
    u = random_positive_field(P, rng, L=4)
    v = random_positive_field(P, rng, L=4)
    lhs = quadform.a2s(u + v, P)[0]
    rhs = quadform.a2s(u, P)[0] + 2 * quadform.a2s_bilinear(u, v, P) + quadform.a2s(v, P)[0]
    assert abs(lhs - rhs) <= 1e-8 * quadform.scale(u + v, P)
    assert quadform.a2s_bilinear(u, v, P) == pytest.approx(quadform.a2s_bilinear(v, u, P), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds, matrix)
def test_reverse_sobolev_inequality(seed, P):
    u = random_positive_field(P, np.random.default_rng(seed), L=5)
    d, diag = quadform.deficit(u, P, return_diagnostics=True)
    assert d >= -1e-7 * diag.scale


@settings(max_examples=20, deadline=None)
@given(seeds, matrix)
def test_deficit_vanishes_on_bubbles(seed, P):
    rng = np.random.default_rng(seed)
    zeta = sphere.random_unit_vectors(P.n + 1, 1, rng)[0] * rng.uniform(0, 0.9)
    v = conformal.bubble_eval(Bubble(float(rng.uniform(0.3, 3)), zeta, P))
    d, diag = quadform.deficit(v, P, return_diagnostics=True)
    assert abs(d) <= 1e-6 * diag.scale


@settings(max_examples=10, deadline=None)
@given(seeds, matrix)
def test_conformal_invariance(seed, P):
    rng = np.random.default_rng(seed)
    u = random_positive_field(P, rng, L=3)
    phi = ConformalMap.random(P.n, rng, delta_max=3.0)
    up = conformal.pullback(u, phi, P)
    assert quadform.a2s(up, P)[0] == pytest.approx(quadform.a2s(u, P)[0], rel=1e-6)
    assert quadform.deficit(up, P) == pytest.approx(quadform.deficit(u, P), rel=1e-6, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seeds, matrix)
def test_high_band_coercive(seed, P):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(sphere.basis_dimension(P.n, 6))
    c[:sphere.basis_dimension(P.n, 1)] = 0
    val = quadform.a2s(HarmonicField(P.n, c), P)[0]
    assert val >= alpha(P, 2) * float(c @ c) * (1 - 1e-12)


def test_deficit_requires_positive():
    P = SpectralParams(2, 1.5)
    with pytest.raises(PositivityError):
        quadform.deficit(coordinate(2, 2) + 0.5, P)


def test_deficit_of_single_mode():
    # 1 + eps Y_2: deficit = eps^2 (alpha(2) - ...) to leading order; compare to quadrature
    P = SpectralParams(2, 2.5)
    eps = 0.05
    Y = HarmonicField.from_terms(2, [(2, 0, 1.0)])
    u = Y * eps + 1.0
    d = quadform.deficit(u, P)
    assert d > 0
    assert d / eps ** 2 == pytest.approx(alpha(P, 2) - alpha(P, 1), rel=0.05)


def test_diagnostics_serialize():
    P = SpectralParams(1, 0.75)
    _, diag = quadform.a2s(constant(1, 1.0) + coordinate(1, 0) * 0.2, P)
    d = diag.to_dict()
    assert d["converged"] and d["scale"] == pytest.approx(diag.positive_part - diag.negative_part)
