import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as spi
from scipy.special import sph_harm_y

from reverse_sobolev import sphere
from reverse_sobolev.exceptions import InvalidParameterError


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("res", [8, 17, 40])
def test_weights_sum_to_area(n, res):
    g = sphere.build_grid(n, res)
    area = 2 * math.pi if n == 1 else 4 * math.pi
    assert g.weights.sum() == pytest.approx(area, rel=1e-13)
    assert np.all(g.weights > 0)
    assert np.allclose(np.linalg.norm(g.nodes, axis=1), 1, atol=1e-15)


@pytest.mark.parametrize("bad", [0, 7, 9.5, -3])
def test_bad_resolution(bad):
    with pytest.raises(InvalidParameterError):
        sphere.build_grid(2, bad)


def test_unsupported_dimension():
    with pytest.raises(InvalidParameterError):
        sphere.build_grid(3, 16)


@pytest.mark.parametrize("n,L", [(1, 12), (2, 10)])
def test_orthonormal_basis(n, L):
    g = sphere.grid_for_degree(n, L)
    B = sphere.evaluate_basis(n, L, g.nodes)
    gram = (B * g.weights[:, None]).T @ B
    assert np.abs(gram - np.eye(len(gram))).max() < 1e-12


def test_basis_matches_scipy_real_harmonics():
    rng = np.random.default_rng(0)
    pts = sphere.random_unit_vectors(3, 25, rng)
    theta = np.arccos(np.clip(pts[:, 2], -1, 1))
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    L = 7
    B = sphere.evaluate_basis(2, L, pts)
    for ell in range(L + 1):
        for m in range(-ell, ell + 1):
            Y = sph_harm_y(ell, abs(m), theta, phi)
            if m == 0:
                ref = Y.real
            elif m > 0:
                ref = math.sqrt(2) * (-1) ** m * Y.real
            else:
                ref = math.sqrt(2) * (-1) ** m * Y.imag
            got = B[:, sphere.harmonic_index(2, ell, m)]
            # Condon-Shortley phase conventions differ; compare up to sign
            sign = np.sign(got @ ref)
            assert np.allclose(got, sign * ref, atol=1e-12), (ell, m)


@pytest.mark.parametrize("n", [1, 2])
def test_analyze_synthesize_roundtrip(n, rng):
    L = 9
    c = rng.standard_normal(sphere.basis_dimension(n, L))
    g = sphere.grid_for_degree(n, L)
    vals = sphere.synthesize(n, c, g.nodes)
    assert np.allclose(sphere.analyze(g, vals, L), c, atol=1e-12)


def test_analyze_degree_guard():
    g = sphere.build_grid(2, 8)
    with pytest.raises(InvalidParameterError):
        sphere.analyze(g, np.zeros(g.size), g.max_degree + 1)
    with pytest.raises(InvalidParameterError):
        sphere.project(g, lambda x: x[:, 0], g.max_degree + 1)


def test_integrate_against_scipy_dblquad():
    f = lambda x: np.exp(x[:, 0] - 0.5 * x[:, 2]) * (1.2 + x[:, 1])
    g = sphere.grid_for_degree(2, 40)
    ref, _ = spi.dblquad(
        lambda t, p: math.sin(t) * math.exp(math.sin(t) * math.cos(p) - 0.5 * math.cos(t))
        * (1.2 + math.sin(t) * math.sin(p)),
        0, 2 * math.pi, 0, math.pi, epsabs=1e-13, epsrel=1e-13)
    assert sphere.integrate(g, f) == pytest.approx(ref, rel=1e-11)


def test_integrate_circle_against_quad():
    f = lambda x: 1 / (1.5 - x[:, 0])
    g = sphere.grid_for_degree(1, 64)
    ref, _ = spi.quad(lambda t: 1 / (1.5 - math.cos(t)), 0, 2 * math.pi, epsabs=1e-14)
    assert sphere.integrate(g, f) == pytest.approx(ref, rel=1e-12)


def test_integrate_rejects_nonfinite():
    g = sphere.build_grid(1, 8)
    with pytest.raises(InvalidParameterError):
        sphere.integrate(g, np.full(g.size, np.nan))


@pytest.mark.parametrize("n", [1, 2])
def test_project_single_harmonic(n):
    m = 0 if n == 2 else 1
    Y = sphere.harmonic(n, 3, m)
    g = sphere.grid_for_degree(n, 8)
    assert sphere.project(g, Y, 3) == pytest.approx(1.0, rel=1e-12)
    assert sphere.project(g, Y, 2) == pytest.approx(0.0, abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2]))
def test_band_energies_rotation_invariant(seed, n):
    rng = np.random.default_rng(seed)
    R = sphere.random_rotation(n + 1, rng)
    a = rng.standard_normal(n + 1)
    f = lambda x: np.exp(0.4 * x @ a)
    g = lambda x: f(x @ R.T)
    grid = sphere.grid_for_degree(n, 24)
    e1, e2 = sphere.spectrum(grid, f, 12), sphere.spectrum(grid, g, 12)
    assert np.allclose(e1, e2, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 3]))
def test_random_rotation_orthogonal(seed, d):
    R = sphere.random_rotation(d, np.random.default_rng(seed))
    assert np.allclose(R.T @ R, np.eye(d), atol=1e-13)
    assert np.linalg.det(R) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 2])
def test_refined_grid_integrates_peaked_function(n):
    center = np.ones(n + 1) / math.sqrt(n + 1)
    eps = 1e-3
    # int (1 - x.c + eps)^(-1) has a narrow peak of width sqrt(eps)
    f = lambda x: 1 / (1 - x @ center + eps)
    nodes, w = sphere.refined_grid(n, center, math.sqrt(eps) / 4)
    got = float(w @ f(nodes))
    if n == 2:
        ref = 2 * math.pi * math.log((2 + eps) / eps)
    else:
        ref = 2 * math.pi / math.sqrt(eps * (2 + eps))
    assert got == pytest.approx(ref, rel=1e-9)


def test_harmonic_index_validation():
    assert sphere.harmonic_index(2, 3, -3) == 9
    assert sphere.harmonic_index(1, 2, 1) == 3
    with pytest.raises(InvalidParameterError):
        sphere.harmonic_index(2, 1, 2)
    with pytest.raises(InvalidParameterError):
        sphere.harmonic_index(1, 2, 0)


def test_degree_labels_and_dimension():
    for n in (1, 2):
        for L in (0, 1, 5):
            labels = sphere.degree_labels(n, L)
            assert len(labels) == sphere.basis_dimension(n, L)
            assert np.bincount(labels).tolist() == [sphere.degree_multiplicity(n, l) for l in range(L + 1)]
