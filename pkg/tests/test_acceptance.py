"""Acceptance criteria 1-10, each at its stated tolerance and runtime budget.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists
one PASS/FAIL line per criterion.
"""

import time

import numpy as np
import pytest

from reverse_sobolev import conformal, decompose, quadform, sphere, stability
from reverse_sobolev.conformal import Bubble, ConformalMap
from reverse_sobolev.field import HarmonicField, pnorm
from reverse_sobolev.specialfn import (SpectralParams, alpha, alpha_asymptotic_deviation,
                                       alpha_asymptotic_limit, balance_constant,
                                       bubble_profile_integral, concentration_constant,
                                       local_constant, sobolev_constant, sphere_area)
from reverse_sobolev.verify import admissible_sample, constructed_field, random_positive_field

MATRIX = [SpectralParams(2, 1.5), SpectralParams(2, 2.5), SpectralParams(1, 0.75), SpectralParams(1, 2.0)]


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_01_constants(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for P in admissible_sample(50, seed=2024):
        a0, a1, a2 = alpha(P, 0), alpha(P, 1), alpha(P, 2)
        worst = max(worst,
                    rel(sobolev_constant(P), a0 * sphere_area(P.n) ** (2 * P.s / P.n)),
                    rel(a1, (P.p - 1) * a0),
                    rel(1 - a1 / a2, local_constant(P)))
    dt = time.perf_counter() - t0
    ok = criterion(1, worst <= 1e-12 and dt < 1.0,
                   f"max rel err {worst:.2e} (tol 1e-12) over 50 samples, {dt:.3f} s")
    assert ok


def test_criterion_02_normalization(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst_p = worst_a = 0.0
    for P in MATRIX:
        area = sphere_area(P.n)
        dirs = sphere.random_unit_vectors(P.n + 1, 5, rng)
        for r in (0.0, 0.3, 0.6, 0.9):
            for d in dirs:
                v = conformal.bubble_eval(Bubble(1.0, r * d, P))
                a, diag = quadform.a2s(v, P)
                grid = sphere.grid_for_degree(P.n, diag.L)
                worst_p = max(worst_p, rel(pnorm(v, P.p, grid) ** P.p, area))
                worst_a = max(worst_a, rel(a, alpha(P, 0) * area))
    dt = time.perf_counter() - t0
    ok = criterion(2, max(worst_p, worst_a) <= 1e-6 and dt < 60,
                   f"int v^p rel {worst_p:.2e}, a2s[v] rel {worst_a:.2e} (tol 1e-6), {dt:.1f} s")
    assert ok


def test_criterion_03_conformal_invariance(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_a = worst_d = 0.0
    for P in MATRIX:
        for _ in range(20):
            u = random_positive_field(P, rng, L=4)
            phi = ConformalMap.random(P.n, rng, delta_max=3.0)
            up = conformal.pullback(u, phi, P)
            a_u = quadform.a2s(u, P)[0]
            worst_a = max(worst_a, abs(quadform.a2s(up, P)[0] - a_u) / abs(a_u))
            d_u = quadform.deficit(u, P)
            worst_d = max(worst_d, abs(quadform.deficit(up, P) - d_u) / abs(a_u))
    dt = time.perf_counter() - t0
    ok = criterion(3, max(worst_a, worst_d) <= 1e-6 and dt < 120,
                   f"a2s {worst_a:.2e}, deficit {worst_d:.2e} (tol 1e-6 |a2s[u]|), "
                   f"20 pairs x {len(MATRIX)} (n,s), {dt:.1f} s")
    assert ok


def test_criterion_04_reverse_sobolev(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = np.inf
    for P in MATRIX:
        for _ in range(200):
            u = random_positive_field(P, rng)
            d, diag = quadform.deficit(u, P, return_diagnostics=True)
            worst = min(worst, d / diag.scale)
    worst_b = 0.0
    for P in MATRIX:
        for _ in range(10):
            zeta = sphere.random_unit_vectors(P.n + 1, 1, rng)[0] * rng.uniform(0, 0.9)
            v = conformal.bubble_eval(Bubble(float(rng.uniform(0.5, 2)), zeta, P))
            d, diag = quadform.deficit(v, P, return_diagnostics=True)
            worst_b = max(worst_b, abs(d) / diag.scale)
    dt = time.perf_counter() - t0
    ok = criterion(4, worst >= -1e-7 and worst_b <= 1e-6 and dt < 180,
                   f"min deficit/scale {worst:.2e} (>= -1e-7) over 200 fields x {len(MATRIX)}; "
                   f"bubbles {worst_b:.2e} (<= 1e-6), {dt:.1f} s")
    assert ok


def test_criterion_05_decomposition(criterion):
    t0 = time.perf_counter()
    worst_rec = 0.0
    gate_fail = 0
    empty = 0
    corpus = 0
    rng = np.random.default_rng(5)
    for P in MATRIX:
        e = np.eye(P.n + 1)
        fields = []
        for k, (c, r) in enumerate([(1.0, 0.5), (1.7, 0.3), (0.8, 0.6)]):
            zeta = r * e[k % (P.n + 1)]
            u = constructed_field(P, c, zeta, 0.05, seed=k)
            d = decompose.solve_branch(u, decompose.center_of_mass_start(u, P), P)
            worst_rec = max(worst_rec, abs(d.c - c) / c, float(np.abs(d.zeta - zeta).max()))
            fields.append(u)
        fields += [random_positive_field(P, rng, L=4) for _ in range(3)]
        fields.append(conformal.two_bubble(P, 0.9))
        for u in fields:
            corpus += 1
            cps = decompose.enumerate_critical_points(u, P, budget=4, seed=0)
            empty += len(cps) == 0
            for d in cps:
                if not (d.residual_norm < decompose.ORTHOGONALITY_TOL * d.scale
                        and d.orthogonality < decompose.ORTHOGONALITY_TOL * d.scale):
                    gate_fail += 1
    dt = time.perf_counter() - t0
    ok = criterion(5, worst_rec <= 1e-6 and gate_fail == 0 and empty == 0 and dt < 180,
                   f"recovery err {worst_rec:.2e} (tol 1e-6), gate failures {gate_fail}, "
                   f"empty critical sets {empty}/{corpus}, {dt:.1f} s")
    assert ok


def test_criterion_06_local_constant(criterion):
    P = SpectralParams(2, 1.5)
    eps = [0.04, 0.02, 0.01]
    rows = stability.probe_local(P, stability.zonal_harmonic(2, 2), eps, budget=4)
    errs = [r["quotient"] - 6 / 7 for r in rows]
    rates = stability.richardson_rate(eps, errs)
    ok = criterion(6, abs(errs[-1]) < 0.01 and all(1.8 < q < 2.2 for q in rates),
                   f"E - 6/7 = {[f'{x:.2e}' for x in errs]}, halving ratios "
                   f"{[round(q, 3) for q in rates]} (O(eps) means 2)")
    assert ok


def test_criterion_07_sharpness(criterion):
    P = SpectralParams(2, 2.5)
    rows = stability.probe_sharpness(P, [2, 4, 6, 10], 0.01, budget=4)
    q = [r["quotient"] for r in rows]
    dev = max(abs(r["quotient"] / r["predicted"] - 1) for r in rows)
    # every quotient computed for sigma in (1, 2) elsewhere in this run stays above 1
    others = []
    rng = np.random.default_rng(7)
    for Q in (P, SpectralParams(1, 2.0)):
        for _ in range(4):
            others.append(stability.quotient(random_positive_field(Q, rng, L=4), Q, budget=2,
                                             check_invariance=False).quotient)
        others += [r["quotient"] for r in stability.bubble_study(Q, [0.5, 0.95], budget=4)]
    lowest = min(q + others)
    ok = criterion(7, dev <= 0.02 and all(a > b for a, b in zip(q, q[1:])) and min(q) > 1
                   and lowest >= 1 - 1e-6,
                   f"max rel dev {dev:.2e} (tol 0.02), E(l=2,4,6,10) = {[round(x, 6) for x in q]}, "
                   f"lowest quotient seen {lowest:.6f}")
    assert ok


def test_criterion_08_strict_inequality(criterion):
    P = SpectralParams(2, 1.5)
    res = stability.probe_strict(P, budget=4)
    lc = local_constant(P)
    ok = criterion(8, res.relative_error <= 0.05 and res.min_quotient < lc - 1e-3,
                   f"slope {res.slope_measured:.8f} vs {res.slope_predicted:.8f} "
                   f"(rel {res.relative_error:.1e}, tol 0.05); min E {res.min_quotient:.6f} < {lc - 1e-3:.6f}")
    assert ok


def test_criterion_09_asymptotics(criterion):
    from scipy import integrate

    details, ok = [], True
    for P in MATRIX:
        devs = np.array([d for _, d in alpha_asymptotic_deviation(P, 1000)])
        limit = alpha_asymptotic_limit(P)
        bounded = devs.max() <= 2 * abs(limit) + 1 and abs(devs[-1] - limit) <= 0.05 * abs(limit) + 0.01
        u = HarmonicField.from_terms(P.n, [(1, 0 if P.n == 2 else 1, 0.3), (2, 1, 0.2)], offset=1.0)
        ratio = rel(stability.concentration_ratio(u, P, np.ones(P.n + 1), 0.99), concentration_constant(P))
        b = (P.n + 2 * P.s) / 2
        radial, _ = integrate.quad(lambda r: (2 / (1 + r * r)) ** b * r ** (P.n - 1), 0, np.inf,
                                   epsabs=0, epsrel=1e-13, limit=400)
        c_conc_q = 2.0 ** (P.n / (2 * P.p)) * sphere_area(P.n - 1) * radial
        conc = rel(concentration_constant(P), c_conc_q)
        prof = rel(bubble_profile_integral(P), sphere_area(P.n - 1) * radial)
        bal, _ = integrate.quad(lambda r: (1 - r * r) / (1 + r * r) * (2 / (1 + r * r)) ** b * r ** (P.n - 1),
                                0, np.inf, epsabs=0, epsrel=1e-13, limit=400)
        bal = rel(balance_constant(P), sphere_area(P.n - 1) * bal)
        errs = stability.balance_errors(u, P, np.ones(P.n + 1))
        mono = all(x > y for x, y in zip(errs, errs[1:]))
        this = bounded and ratio <= 0.03 and max(conc, prof, bal) <= 1e-8 and mono
        ok &= this
        details.append(f"(n={P.n},s={P.s}) dev*k max {devs.max():.3f}->{devs[-1]:.3f} "
                       f"conc {ratio:.1e} c_conc {conc:.0e} c_bal {bal:.0e} G {errs[-1]:.1e}")
    ok = criterion(9, ok, "; ".join(details))
    assert ok


@pytest.mark.parametrize("P", [SpectralParams(1, 2.0), SpectralParams(2, 2.5)], ids=["n1-s2.0", "n2-s2.5"])
def test_criterion_10_two_bubble(criterion, P):
    u = conformal.two_bubble(P, 0.95)
    res = decompose.distance(u, P, budget=16, seed=0)
    E = np.sort(res.critical_points.energies())
    # largest group of critical points sharing one energy to 1e-8 relative
    best, k = 1, 0
    while k < len(E):
        j = k
        while j + 1 < len(E) and abs(E[j + 1] - E[k]) <= 1e-8 * abs(E[k]):
            j += 1
        best = max(best, j - k + 1)
        k = j + 1
    ok = criterion(10, len(E) >= 2 and best >= 2 and res.value > 0,
                   f"(n={P.n},s={P.s}) {len(E)} critical points, {best} share one rho-energy "
                   f"(rel 1e-8), d = {res.value:.6g}")
    assert ok
