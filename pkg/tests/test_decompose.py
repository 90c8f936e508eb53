import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from reverse_sobolev import conformal, decompose, quadform, sphere
from reverse_sobolev.conformal import Bubble
from reverse_sobolev.exceptions import InvalidParameterError, OnManifoldError, PositivityError
from reverse_sobolev.field import HarmonicField, coordinate
from reverse_sobolev.specialfn import SpectralParams, alpha, sphere_area
from reverse_sobolev.stability import zonal_harmonic
from reverse_sobolev.verify import constructed_field, random_positive_field


def test_gradient_of_G_matches_finite_differences(params):
    rng = np.random.default_rng(2)
    u = random_positive_field(params, rng, L=4)
    zeta = sphere.random_unit_vectors(params.n + 1, 1, rng)[0] * 0.4
    G, grad = decompose.g_and_gradient(u, zeta, params)
    assert G == pytest.approx(decompose.g_functional(u, zeta, params), rel=1e-14)
    grid = decompose.solve_grid(u, zeta, params)
    h = 1e-6
    for i in range(params.n + 1):
        e = np.zeros(params.n + 1)
        e[i] = h
        fd = (decompose.g_functional(u, zeta + e, params, grid)
              - decompose.g_functional(u, zeta - e, params, grid)) / (2 * h)
        assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-8 * abs(G))


def test_quadrature_and_spectral_residuals_agree(params):
    rng = np.random.default_rng(4)
    u = random_positive_field(params, rng, L=4)
    s = quadform.scale(u, params)
    for _ in range(3):
        z = sphere.random_unit_vectors(params.n + 1, 1, rng)[0] * rng.uniform(0, 0.7)
        c = float(rng.uniform(0.5, 2))
        F1 = decompose.residual_F(u, c, z, params)
        F2 = decompose.residual_quadrature(u, c, z, params)
        assert np.max(np.abs(F1 - F2)) <= 1e-10 * s


@pytest.mark.parametrize("c,r,axis", [(1.0, 0.5, 2), (1.7, 0.3, 0), (0.8, 0.6, 1)])
def test_ground_truth_recovery(params, c, r, axis):
    zeta = np.zeros(params.n + 1)
    zeta[min(axis, params.n)] = r
    u = constructed_field(params, c, zeta, 0.05, seed=axis)
    d = decompose.solve_branch(u, decompose.center_of_mass_start(u, params), params)
    assert d.c == pytest.approx(c, rel=1e-6)
    assert np.max(np.abs(d.zeta - zeta)) <= 1e-6
    assert d.rho_energy == pytest.approx(d.rho_energy_identity, rel=1e-6)


def test_single_mode_distance(params):
    eps = 0.05
    u = zonal_harmonic(params.n, 2) * eps + 1.0
    res = decompose.distance(u, params, budget=4, seed=0)
    assert res.value == pytest.approx(eps ** 2 * alpha(params, 2), rel=1e-8)
    assert res.argmin.c == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(res.argmin.zeta)) < 1e-10
    assert res.multiplicity == 1


def test_on_manifold_fenced(params):
    e = np.zeros(params.n + 1)
    e[-1] = 0.4
    v = conformal.bubble_eval(Bubble(1.3, e, params))
    with pytest.raises(OnManifoldError):
        decompose.distance(v, params, budget=2)


def test_nonpositive_rejected():
    P = SpectralParams(2, 1.5)
    with pytest.raises(PositivityError):
        decompose.enumerate_critical_points(coordinate(2, 2) + 0.2, P, budget=1)


def test_newton_rejects_start_outside_ball():
    P = SpectralParams(2, 1.5)
    u = zonal_harmonic(2, 2) * 0.1 + 1.0
    with pytest.raises(InvalidParameterError):
        decompose.newton(u, 1.0, np.array([0.0, 0.0, 1.0]), P, 1.0)


def test_negative_budget():
    P = SpectralParams(2, 1.5)
    with pytest.raises(InvalidParameterError):
        decompose.enumerate_critical_points(zonal_harmonic(2, 2) * 0.1 + 1.0, P, budget=-1)


def test_critical_set_deterministic_and_sorted():
    P = SpectralParams(1, 2.0)
    u = conformal.two_bubble(P, 0.95)
    a = decompose.enumerate_critical_points(u, P, budget=6, seed=3)
    b = decompose.enumerate_critical_points(u, P, budget=6, seed=3)
    assert [d.to_dict() for d in a] == [d.to_dict() for d in b]
    keys = [decompose._canonical_key(d) for d in a]
    assert keys == sorted(keys)


def test_axis_scan_finds_symmetric_pair():
    P = SpectralParams(1, 2.0)
    u = conformal.two_bubble(P, 0.95)
    roots = decompose.axis_scan(u, P, [1.0, 0.0], np.linspace(-0.95, 0.95, 39))
    assert len(roots) == 3
    assert roots[1] == pytest.approx(0.0, abs=1e-10)
    assert roots[0] == pytest.approx(-roots[2], rel=1e-8)
    cps = decompose.enumerate_critical_points(u, P, budget=4)
    found = sorted(float(d.zeta[0]) for d in cps)
    assert np.allclose(found, roots, atol=1e-6)


@settings(max_examples=6, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2 ** 32 - 1),
       st.sampled_from([SpectralParams(1, 0.75), SpectralParams(2, 1.5), SpectralParams(2, 2.5)]))
def test_decomposition_invariants_on_random_fields(seed, P):
    u = random_positive_field(P, np.random.default_rng(seed), L=4)
    cps = decompose.enumerate_critical_points(u, P, budget=2, seed=seed)
    assert len(cps) >= 1
    lb = decompose.reverse_holder_lower_bound(u, P)
    for d in cps:
        s = d.scale
        assert d.residual_norm < 1e-8 * s
        assert d.orthogonality < 1e-8 * s
        assert abs(d.rho_energy - d.rho_energy_identity) <= 1e-6 * max(abs(d.rho_energy_identity), 1e-6 * s)
        assert d.c >= lb * (1 - 1e-8)
        assert d.G == pytest.approx(d.c * sphere_area(P.n), rel=1e-8)


def test_distance_result_serializes():
    P = SpectralParams(2, 2.5)
    u = HarmonicField.from_terms(2, [(2, 0, 0.05), (3, 1, 0.02)], offset=1.0)
    res = decompose.distance(u, P, budget=2)
    d = res.to_dict()
    assert d["distance"] == res.value and d["multiplicity"] == res.multiplicity
    assert len(d["critical_points"]["points"]) == len(res.critical_points)
