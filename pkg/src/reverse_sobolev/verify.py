"""Named invariant suites run by ``reverse-sobolev verify``.

Each check records a value, the tolerance it was held to, and a short anchor
naming the identity or claim it exercises.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, asdict

import numpy as np

from . import conformal, decompose, quadform, sphere, stability
from .exceptions import OnManifoldError, ReverseSobolevError
from .field import HarmonicField, pnorm
from .specialfn import (SpectralParams, alpha, alpha_asymptotic_deviation, balance_constant,
                        bubble_profile_integral, concentration_constant, local_constant,
                        sobolev_constant, sphere_area)

log = logging.getLogger(__name__)

SUITES = ("constants", "sphere", "conformal", "quadform", "decompose", "stability", "asymptotics")
DEFAULT_MATRIX = ((1, 0.75), (1, 2.0), (2, 1.5), (2, 2.5))


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    value: float | None
    tolerance: float | None
    anchor: str
    params: dict
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


class _Recorder:
    def __init__(self, suite, params):
        self.suite = suite
        self.params = params
        self.checks: list[Check] = []

    def add(self, name, passed, value=None, tolerance=None, anchor="", detail=""):
        self.checks.append(Check(self.suite, name, bool(passed),
                                 None if value is None else float(value),
                                 tolerance, anchor, self.params.to_dict(), detail))

    def run(self, name, fn, anchor=""):
        """Run ``fn`` returning (passed, value, tolerance[, detail]); errors count as failures."""
        try:
            out = fn()
        except ReverseSobolevError as exc:
            self.add(name, False, None, None, anchor, f"{type(exc).__name__}: {exc}")
            return
        self.add(name, *out[:3], anchor=anchor, detail=out[3] if len(out) > 3 else "")


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def admissible_sample(k: int, seed: int = 0):
    """k admissible (n, s) pairs with n in 1..4 and sigma spread over both windows."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < k:
        n = int(rng.integers(1, 5))
        sigma = float(rng.uniform(0.02, 1.98))
        if abs(sigma - 1) < 0.02:
            continue
        out.append(SpectralParams(n, n / 2 + sigma))
    return out


def random_positive_field(params: SpectralParams, rng, L: int = 6, floor: float = 0.2):
    """c v_zeta + eta h with h a random expansion up to degree L, scaled so u stays positive."""
    n = params.n
    zeta = sphere.random_unit_vectors(n + 1, 1, rng)[0] * rng.uniform(0, 0.8)
    c = float(rng.uniform(0.5, 2.0))
    v = conformal.bubble_eval(conformal.Bubble(c, zeta, params))
    h = HarmonicField(n, rng.standard_normal(sphere.basis_dimension(n, L)))
    grid = sphere.grid_for_degree(n, max(sphere.DEFAULT_DEGREE[n], v.degree_hint))
    vv, hh = v.samples(grid), h.samples(grid)
    # largest eta keeping u >= floor * v at every node
    neg = hh < 0
    cap = np.min((1 - floor) * vv[neg] / -hh[neg]) if np.any(neg) else 1.0
    eta = float(rng.uniform(0.05, 1.0)) * cap
    return v + h * eta


# ---------------------------------------------------------------------------

def suite_constants(params: SpectralParams, tamper: float = 0.0, sweep: int = 50) -> list[Check]:
    rec = _Recorder("constants", params)
    al = lambda P, l: alpha(P, l) * (1 + tamper)
    anchor_S = "sharp constant: Gamma formula vs alpha(0)|S^n|^(2s/n)"
    for k, P in enumerate([params] + admissible_sample(sweep)):
        tag = "" if k == 0 else f"[sweep {k}]"
        S1 = sobolev_constant(P)
        S2 = al(P, 0) * sphere_area(P.n) ** (2 * P.s / P.n)
        rec.add(f"sobolev_constant_identity{tag}", rel(S1, S2) <= 1e-12, rel(S1, S2), 1e-12, anchor_S)
        r = rel(al(P, 1), (P.p - 1) * al(P, 0))
        rec.add(f"alpha1_identity{tag}", r <= 1e-12, r, 1e-12, "alpha(1) = (p-1) alpha(0)")
        r = rel(1 - al(P, 1) / al(P, 2), local_constant(P))
        rec.add(f"local_constant_identity{tag}", r <= 1e-12, r, 1e-12,
                "1 - alpha(1)/alpha(2) = 4s/(n+2s+2)")
    S = sobolev_constant(params)
    rec.add("sobolev_constant_sign", (S < 0) == (params.window == 0), S, None,
            "sharp constant negative exactly when s - n/2 < 1")
    worst = max(rel(al(params, l + 1) / al(params, l),
                    (l + params.n / 2 + params.s) / (l + params.n / 2 - params.s)) for l in range(40))
    rec.add("alpha_recurrence", worst <= 1e-13, worst, 1e-13, "Gamma recurrence for alpha")
    low = min(al(params, l) for l in range(2, 200))
    rec.add("alpha_positive_high_degrees", low > 0, low, None,
            "a_2s positive definite on E_{>=2}")
    return rec.checks


def suite_sphere(params: SpectralParams, resolution: int | None = None, seed: int = 0) -> list[Check]:
    rec = _Recorder("sphere", params)
    n = params.n
    L = 16
    grid = sphere.build_grid(n, resolution) if resolution else sphere.grid_for_degree(n, L)
    L = min(L, grid.max_degree // 2)
    r = rel(grid.weights.sum(), sphere_area(n))
    rec.add("weights_sum", r <= 1e-12 and np.all(grid.weights > 0), r, 1e-12, "quadrature measure")
    e = float(np.abs(np.linalg.norm(grid.nodes, axis=1) - 1).max())
    rec.add("unit_nodes", e <= 1e-14, e, 1e-14, "nodes on S^n")
    B = sphere.evaluate_basis(n, L, grid.nodes)
    gram = (B * grid.weights[:, None]).T @ B
    e = float(np.abs(gram - np.eye(len(gram))).max())
    rec.add("orthonormality", e <= 1e-10, e, 1e-10, "orthonormal harmonic basis")
    rng = np.random.default_rng(seed)
    R = sphere.random_rotation(n + 1, rng)
    f = lambda x: np.exp(x[:, 0] - 0.5 * x[:, -1])
    g = lambda x: f(x @ R.T)
    e1 = sphere.spectrum(grid, f, L)
    e2 = sphere.spectrum(grid, g, L)
    e = float(np.abs(e1 - e2).max())
    rec.add("rotation_invariant_bands", e <= 1e-9, e, 1e-9, "degree energies rotation invariant")
    return rec.checks


def suite_conformal(params: SpectralParams, seed: int = 0, pairs: int = 20) -> list[Check]:
    rec = _Recorder("conformal", params)
    n = params.n
    rng = np.random.default_rng(seed)
    area = sphere_area(n)
    a0 = alpha(params, 0) * area
    dirs = sphere.random_unit_vectors(n + 1, 5, rng)
    worst_p, worst_a = 0.0, 0.0
    for r in (0.0, 0.3, 0.6, 0.9):
        for d in dirs:
            v = conformal.bubble_eval(conformal.Bubble(1.0, r * d, params))
            worst_p = max(worst_p, rel(pnorm(v, params.p, sphere.grid_for_degree(n, quadform.converged_degree(v, params))) ** params.p, area))
            worst_a = max(worst_a, rel(quadform.a2s(v, params)[0], a0))
    rec.add("bubble_p_integral", worst_p <= 1e-6, worst_p, 1e-6, "int v_zeta^p = |S^n|")
    rec.add("bubble_energy", worst_a <= 1e-6, worst_a, 1e-6, "a_2s[v_zeta] = alpha(0)|S^n|")

    def invariance():
        wa, wd = 0.0, 0.0
        for _ in range(pairs):
            u = random_positive_field(params, rng, L=4)
            phi = conformal.ConformalMap.random(n, rng, delta_max=3.0)
            up = conformal.pullback(u, phi, params)
            wa = max(wa, rel(quadform.a2s(up, params)[0], quadform.a2s(u, params)[0]))
            wd = max(wd, rel(quadform.deficit(up, params), quadform.deficit(u, params)))
        return wa <= 1e-6 and wd <= 1e-6, max(wa, wd), 1e-6, f"a2s {wa:.2e}, deficit {wd:.2e}"

    rec.run("conformal_invariance", invariance, "a_2s and deficit invariant under u -> u_Phi")

    x = rng.standard_normal((50, n))
    w, J = conformal.stereo(x)
    x2, J2 = conformal.stereo_inv(w)
    e = max(float(np.abs(x2 - x).max()), float(np.abs(J * J2 - 1).max()))
    rec.add("stereographic_roundtrip", e <= 1e-13, e, 1e-13, "stereographic projection pair")
    phi = conformal.ConformalMap.random(n, rng)
    grid = sphere.grid_for_degree(n, 96)
    e = rel(sphere.integrate(grid, phi.jacobian(grid.nodes)), area)
    rec.add("jacobian_pushforward", e <= 1e-8, e, 1e-8, "int J_Phi = |S^n|")
    return rec.checks


def suite_quadform(params: SpectralParams, seed: int = 0, fields: int = 200) -> list[Check]:
    rec = _Recorder("quadform", params)
    n = params.n
    rng = np.random.default_rng(seed)

    def polarization():
        u = random_positive_field(params, rng)
        v = random_positive_field(params, rng)
        lhs = quadform.a2s(u + v, params)[0]
        rhs = (quadform.a2s(u, params)[0] + 2 * quadform.a2s_bilinear(u, v, params)
               + quadform.a2s(v, params)[0])
        r = abs(lhs - rhs) / (quadform.scale(u + v, params))
        return r <= 1e-8, r, 1e-8

    rec.run("polarization", polarization, "a_2s bilinear polarization")

    worst = math.inf
    for _ in range(10):
        L = 6
        c = rng.standard_normal(sphere.basis_dimension(n, L))
        c[:sphere.basis_dimension(n, 1)] = 0
        rho = HarmonicField(n, c)
        slack = quadform.a2s(rho, params)[0] - alpha(params, 2) * float(c @ c)
        worst = min(worst, slack / float(c @ c))
    rec.add("positivity_high_bands", worst >= -1e-9, worst, 1e-9, "a_2s[rho] >= alpha(2)||rho||^2 on E_{>=2}")

    def sobolev():
        bad, worst = 0, math.inf
        for _ in range(fields):
            u = random_positive_field(params, rng)
            d, diag = quadform.deficit(u, params, return_diagnostics=True)
            worst = min(worst, d / diag.scale)
            bad += d < -1e-7 * diag.scale
        return bad == 0, worst, 1e-7, f"{bad} violations in {fields} fields"

    rec.run("reverse_sobolev_inequality", sobolev, "deficit >= 0 for positive u")

    def on_manifold():
        worst = 0.0
        for _ in range(10):
            b = conformal.Bubble(float(rng.uniform(0.5, 2)),
                                 sphere.random_unit_vectors(n + 1, 1, rng)[0] * rng.uniform(0, 0.9), params)
            v = conformal.bubble_eval(b)
            d, diag = quadform.deficit(v, params, return_diagnostics=True)
            worst = max(worst, abs(d) / diag.scale)
        return worst <= 1e-6, worst, 1e-6

    rec.run("deficit_vanishes_on_bubbles", on_manifold, "equality exactly on the bubble family")
    return rec.checks


def constructed_field(params: SpectralParams, c: float, zeta, eps: float, seed: int = 0):
    """c v_zeta + eps rho with rho a_2s-orthogonal to the tangent frame at zeta."""
    rng = np.random.default_rng(seed)
    n = params.n
    frame = conformal.tangent_frame(conformal.Bubble(1.0, zeta, params))
    h = HarmonicField(n, rng.standard_normal(sphere.basis_dimension(n, 4)) * 0.3)
    L = max(quadform.converged_degree(f, params) for f in frame)
    M = np.array([[quadform.a2s_bilinear(f, g, params, L) for g in frame] for f in frame])
    b = np.array([quadform.a2s_bilinear(h, f, params, L) for f in frame])
    x = np.linalg.solve(M, b)
    rho = h
    for coef, f in zip(x, frame):
        rho = rho - f * float(coef)
    return conformal.bubble_eval(conformal.Bubble(c, zeta, params)) + rho * eps


def suite_decompose(params: SpectralParams, seed: int = 0, budget: int = 8) -> list[Check]:
    rec = _Recorder("decompose", params)
    n = params.n
    e = np.zeros(n + 1)
    e[-1] = 1.0

    def recovery():
        worst = 0.0
        for k, (c, r) in enumerate([(1.0, 0.5), (1.7, 0.3), (0.8, 0.6)]):
            zeta = r * np.roll(e, k)
            u = constructed_field(params, c, zeta, 0.05, seed + k)
            d = decompose.solve_branch(u, decompose.center_of_mass_start(u, params), params)
            worst = max(worst, abs(d.c - c) / c, float(np.abs(d.zeta - zeta).max()))
        return worst <= 1e-6, worst, 1e-6

    rec.run("ground_truth_recovery", recovery, "orthogonal decomposition exists and is locally unique")

    def single_mode():
        eps = 0.05
        Y = stability.zonal_harmonic(n, 2)
        res = decompose.distance(Y * eps + 1.0, params, budget, seed)
        target = eps ** 2 * alpha(params, 2)
        return rel(res.value, target) <= 1e-8, rel(res.value, target), 1e-8

    rec.run("single_mode_distance", single_mode, "d(1 + eps Y_2) = eps^2 alpha(2)")

    def equivalence():
        rng = np.random.default_rng(seed)
        u = random_positive_field(params, rng)
        worst = 0.0
        for _ in range(3):
            z = sphere.random_unit_vectors(n + 1, 1, rng)[0] * rng.uniform(0, 0.7)
            c = float(rng.uniform(0.5, 2))
            F1 = decompose.residual_F(u, c, z, params)
            F2 = decompose.residual_quadrature(u, c, z, params)
            worst = max(worst, float(np.abs(F1 - F2).max()) / quadform.scale(u, params))
        return worst <= 1e-10, worst, 1e-10

    rec.run("residual_via_G", equivalence, "F_i = alpha(0) dG/dzeta_i")

    def on_manifold():
        v = conformal.bubble_eval(conformal.Bubble(1.3, 0.4 * e, params))
        try:
            decompose.distance(v, params, 2, seed)
        except OnManifoldError:
            return True, None, None
        return False, None, None, "no on-manifold error raised"

    rec.run("on_manifold_fenced", on_manifold, "d(u) > 0 off the manifold, undefined on it")

    def holder_bound():
        rng = np.random.default_rng(seed + 1)
        u = random_positive_field(params, rng)
        cps = decompose.enumerate_critical_points(u, params, budget, seed)
        lb = decompose.reverse_holder_lower_bound(u, params)
        gap = min(d.c for d in cps) - lb
        return gap >= -1e-8, gap, 1e-8

    rec.run("reverse_holder_c_bound", holder_bound, "c >= ||u||_p |S^n|^(-1/p) at critical points")
    return rec.checks


def suite_stability(params: SpectralParams, seed: int = 0, budget: int = 4) -> list[Check]:
    rec = _Recorder("stability", params)
    n = params.n
    lc = local_constant(params)

    def local():
        rows = stability.probe_local(params, stability.zonal_harmonic(n, 2), [0.04, 0.02, 0.01],
                                     budget, seed)
        errs = [r["quotient"] - r["predicted"] for r in rows]
        rates = stability.richardson_rate([r["epsilon"] for r in rows], errs)
        ok = abs(errs[-1]) < 0.01 and all(q > 1.6 for q in rates)
        return ok, abs(errs[-1]), 0.01, f"halving ratios {[round(q, 3) for q in rates]}"

    rec.run("local_expansion", local, "E(1 + eps rho) -> 1 - alpha(1) int rho^2 / a_2s[rho]")

    if params.window == 1 and n == 2:
        def sharp():
            rows = stability.probe_sharpness(params, [2, 4, 6, 10], 0.01, budget, seed)
            q = [r["quotient"] for r in rows]
            dev = max(abs(r["quotient"] / r["predicted"] - 1) for r in rows)
            ok = dev <= 0.02 and all(a > b for a, b in zip(q, q[1:])) and min(q) > 1
            return ok, dev, 0.02, f"quotients {q}"

        rec.run("sharpness_profile", sharp, "best constant 1, not attained")
    if params.window == 0 and n == 2:
        def strict():
            res = stability.probe_strict(params, budget=budget, seed=seed)
            ok = res.relative_error <= 0.05 and res.min_quotient < lc - 1e-3
            return ok, res.relative_error, 0.05, f"min quotient {res.min_quotient:.6f} vs {lc:.6f}"

        rec.run("strict_inequality", strict, "c_BE(s) < 4s/(n+2s+2)")

    if params.window == 1:
        def two_bubble():
            rows = stability.bubble_study(params, [0.95], budget=8, seed=seed)
            r = rows[0]
            if not r.get("converged"):
                return False, None, None, r.get("error", "not converged")
            lv = r["energy_levels"]
            mult = r["critical_points"] - len(lv)
            return (r["critical_points"] >= 2 and mult >= 1 and r["distance"] > 0,
                    r["critical_points"], None, f"energy levels {lv}")

        rec.run("two_bubble_multiplicity", two_bubble, "several critical configurations")
    return rec.checks


def suite_asymptotics(params: SpectralParams, seed: int = 0) -> list[Check]:
    rec = _Recorder("asymptotics", params)
    n = params.n
    dev = max(d for _, d in alpha_asymptotic_deviation(params, 1000))
    rec.add("alpha_stirling", dev <= 10, dev, 10.0, "alpha(k) = k^(2s) (1 + O(1/k))")
    r = rel(bubble_profile_integral(params), stability.bubble_profile_quadrature(params))
    rec.add("profile_integral_quadrature", r <= 1e-8, r, 1e-8, "closed form of int B^(p-1)")
    r = rel(balance_constant(params), stability.balance_constant_quadrature(params))
    rec.add("balance_constant_quadrature", r <= 1e-8, r, 1e-8, "closed form of the balance constant")
    u = HarmonicField.from_terms(n, [(1, 0 if n == 2 else 1, 0.3), (2, 1, 0.2)], offset=1.0)
    nu = np.ones(n + 1)
    r = rel(stability.concentration_ratio(u, params, nu, 0.99), concentration_constant(params))
    rec.add("concentration_limit", r <= 0.03, r, 0.03, "int u v_zeta^(p-1) ~ u(nu)(1-|zeta|)^(n/2p) c")
    rng = np.random.default_rng(seed)
    worst = 0.0
    ok = True
    for xi in sphere.random_unit_vectors(n + 1, 3, rng):
        errs = stability.balance_errors(u, params, xi)
        ok &= all(a > b for a, b in zip(errs, errs[1:]))
        worst = max(worst, errs[-1])
    rec.add("balance_asymptotics", ok, worst, None, "G(delta, xi) -> xi as delta grows")
    return rec.checks


def run_suite(name: str, params: SpectralParams, seed: int = 0, tamper: float = 0.0,
              resolution: int | None = None, budget: int = 8) -> list[Check]:
    if name == "constants":
        return suite_constants(params, tamper)
    if name == "sphere":
        return suite_sphere(params, resolution, seed)
    if name == "conformal":
        return suite_conformal(params, seed)
    if name == "quadform":
        return suite_quadform(params, seed)
    if name == "decompose":
        return suite_decompose(params, seed, budget)
    if name == "stability":
        return suite_stability(params, seed, min(budget, 4))
    if name == "asymptotics":
        return suite_asymptotics(params, seed)
    raise ValueError(f"unknown suite {name!r}")


def run(suites, matrix, seed=0, tamper=0.0, resolution=None, budget=8) -> dict:
    checks = []
    for n, s in matrix:
        params = SpectralParams(n, s)
        for name in suites:
            t0 = time.perf_counter()
            checks.extend(run_suite(name, params, seed, tamper, resolution, budget))
            log.info("suite %s n=%d s=%g: %.1f s", name, n, s, time.perf_counter() - t0)
    return {"passed": all(c.passed for c in checks),
            "failed": [f"{c.suite}:{c.name}@n={c.params['n']},s={c.params['s']}" for c in checks if not c.passed],
            "checks": [c.to_dict() for c in checks]}
