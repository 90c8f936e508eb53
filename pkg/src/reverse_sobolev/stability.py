"""Stability quotient, local probes, sharpness and strict-inequality probes, explorer.

The quotient is ``E(u) = deficit(u) / d(u)``.  All probe tables use the
column names epsilon, ell, beta, quotient, predicted, deficit, distance,
min_u, tail_ratio, converged.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import sphere, quadform, decompose
from .conformal import ConformalMap, balance_G, pullback, two_bubble, map_for_bubble
from .exceptions import (ConvergenceError, InvalidParameterError, OnManifoldError,
                         PositivityError, TruncationError)
from .field import HarmonicField, SphereField, min_on_sphere
from .specialfn import (SpectralParams, alpha, local_constant, sobolev_constant,
                        sobolev_constant_normalized, sphere_area)

log = logging.getLogger(__name__)

PROBE_FIELDS = ["epsilon", "ell", "beta", "quotient", "predicted", "deficit", "distance",
                "min_u", "tail_ratio", "converged"]


@dataclass
class StabilityReport:
    """Deficit, distance and quotient for one field, with diagnostics."""

    params: SpectralParams
    deficit: float
    distance: float
    quotient: float
    a2s: float
    scale: float
    min_u: float
    spectral: quadform.SpectralDiagnostics
    decomposition: decompose.DistanceResult
    invariance_residual: float = float("nan")

    @property
    def converged(self) -> bool:
        return self.spectral.converged

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "deficit": self.deficit,
            "distance": self.distance,
            "quotient": self.quotient,
            "a2s": self.a2s,
            "scale": self.scale,
            "min_u": self.min_u,
            "tail_ratio": self.spectral.tail_ratio,
            "converged": self.converged,
            "truncation_degree": self.spectral.L,
            "invariance_residual": self.invariance_residual,
            "decomposition": self.decomposition.to_dict(),
        }


def quotient(u: SphereField, params: SpectralParams, budget: int = decompose.DEFAULT_BUDGET,
             seed: int = 0, check_invariance: bool = True) -> StabilityReport:
    """E(u) = deficit(u) / d(u).

    With ``check_invariance`` the deficit is recomputed for a pullback of u
    by a random conformal map (seeded), and the relative change is reported.
    """
    value, diag = quadform.a2s(u, params)
    dist = decompose.distance(u, params, budget, seed)
    defc = dist.deficit
    resid = float("nan")
    if check_invariance:
        rng = np.random.default_rng(seed + 7919)
        phi = ConformalMap.random(params.n, rng, delta_max=2.0)
        resid = abs(quadform.deficit(pullback(u, phi, params), params) - defc) / max(abs(defc), 1e-300)
    return StabilityReport(params, defc, dist.value, defc / dist.value, value, diag.scale,
                           min_on_sphere(u), diag, dist, resid)


def quotient_near_constant(rho: HarmonicField, params: SpectralParams) -> float:
    """Deficit of 1 + rho divided by a_2s[rho], the energy of the branch (1, 0).

    For rho in E_{>=2} the constant is always a critical point with remainder
    rho, so this is an upper bound for E(1 + rho) and equal to it whenever
    that branch attains d.  Uses only exact spectra and one p-norm.
    """
    u = rho + 1.0
    grid = sphere.grid_for_degree(params.n, max(sphere.DEFAULT_DEGREE[params.n], 2 * rho.max_degree))
    vals = u.samples(grid)
    if not vals.min() > 0:
        raise PositivityError("1 + rho is not positive", value=float(vals.min()))
    e_rho = float(quadform.band_energies(rho, params, rho.max_degree).sum())
    a_u = alpha(params, 0) * sphere_area(params.n) + e_rho
    norm = sphere.integrate(grid, vals ** params.p) ** (1 / params.p)
    return (a_u - sobolev_constant(params) * norm ** 2) / e_rho


def _require_high_band(rho: HarmonicField):
    labels = sphere.degree_labels(rho.n, rho.max_degree)
    if np.any(np.abs(rho.packed[labels <= 1]) > 1e-14):
        raise InvalidParameterError("rho must have no E_0 or E_1 component")
    if not np.any(rho.packed != 0):
        raise InvalidParameterError("rho must be nonzero")


def predicted_local(rho: HarmonicField, params: SpectralParams) -> float:
    """1 - alpha(1) int rho^2 / a_2s[rho], the limit of E(1 + eps rho) as eps -> 0."""
    energies = quadform.band_energies(rho, params, rho.max_degree)
    return 1 - alpha(params, 1) * float(np.sum(rho.packed ** 2)) / float(energies.sum())


def _row(report: StabilityReport | None, **extra) -> dict:
    row = {k: None for k in PROBE_FIELDS}
    row.update(extra)
    if report is not None:
        row.update(quotient=report.quotient, deficit=report.deficit, distance=report.distance,
                   min_u=report.min_u, tail_ratio=report.spectral.tail_ratio,
                   converged=report.converged)
    return row


def probe_local(params: SpectralParams, rho: HarmonicField, eps_list, budget: int = 4,
                seed: int = 0) -> list[dict]:
    """Rows (epsilon, quotient, predicted) for u = 1 + eps rho, rho in E_{>=2}."""
    _require_high_band(rho)
    pred = predicted_local(rho, params)
    rows = []
    for eps in eps_list:
        u = rho * float(eps) + 1.0
        u.require_positive(what=f"1 + {eps:g} rho")
        rep = quotient(u, params, budget=budget, seed=seed, check_invariance=False)
        rows.append(_row(rep, epsilon=float(eps), predicted=pred))
    return rows


def richardson_rate(eps_list, errors) -> list[float]:
    """Ratios err(eps) / err(eps/2) along a halving sequence; about 2 for an O(eps) error."""
    pairs = sorted(zip(eps_list, errors), key=lambda t: -abs(t[0]))
    return [abs(a[1]) / abs(b[1]) for a, b in zip(pairs[:-1], pairs[1:])]


def zonal_harmonic(n: int, ell: int) -> HarmonicField:
    """Orthonormal Y_{ell,0} on S^2, or cos(ell theta) normalised on S^1."""
    m = 0 if n == 2 else 1
    return HarmonicField.from_terms(n, [(ell, m, 1.0)], label=f"Y_{ell}")


def probe_sharpness(params: SpectralParams, ell_list, eps: float = 0.01, budget: int = 4,
                    seed: int = 0) -> list[dict]:
    """Rows (ell, quotient, predicted) for u = 1 + eps Y_ell; predicted = 1 - alpha(1)/alpha(ell)."""
    if params.window != 1:
        raise InvalidParameterError("the sharpness probe is for s - n/2 in (1, 2)")
    rows = []
    for ell in ell_list:
        if ell < 2:
            raise InvalidParameterError("degrees must be >= 2")
        Y = zonal_harmonic(params.n, int(ell))
        u = Y * eps + 1.0
        u.require_positive(what=f"1 + {eps:g} Y_{ell}")
        try:
            rep = quotient(u, params, budget=budget, seed=seed, check_invariance=False)
        except TruncationError as exc:
            rows.append(_row(None, ell=int(ell), epsilon=eps, converged=False,
                             predicted=1 - alpha(params, 1) / alpha(params, int(ell))))
            log.warning("ell=%d: %s", ell, exc)
            continue
        rows.append(_row(rep, ell=int(ell), epsilon=eps,
                         predicted=1 - alpha(params, 1) / alpha(params, int(ell))))
    return rows


def strict_test_function(n: int = 2) -> SphereField:
    """omega_1 omega_2 + omega_2 omega_3 + omega_3 omega_1 as an exact degree-2 expansion."""
    if n != 2:
        raise InvalidParameterError("the strict-inequality test function is defined on S^2")
    grid = sphere.grid_for_degree(2, 4)
    x = grid.nodes
    vals = x[:, 0] * x[:, 1] + x[:, 1] * x[:, 2] + x[:, 2] * x[:, 0]
    coeffs = sphere.analyze(grid, vals, 2)
    coeffs[np.abs(coeffs) < 1e-15] = 0.0
    return HarmonicField(2, coeffs, label="w1w2+w2w3+w3w1")


@dataclass
class StrictProbeResult:
    slope_measured: float
    slope_predicted: float
    slope_predicted_raw: float
    rho_cube: float
    rho_square: float
    a2s_rho: float
    min_quotient: float
    local_constant: float
    rows: list = field(default_factory=list)

    @property
    def relative_error(self) -> float:
        return abs(self.slope_measured - self.slope_predicted) / abs(self.slope_predicted)

    def to_dict(self) -> dict:
        return {
            "slope_measured": self.slope_measured,
            "slope_predicted": self.slope_predicted,
            "slope_predicted_unnormalized_constant": self.slope_predicted_raw,
            "slope_relative_error": self.relative_error,
            "int_rho_cubed": self.rho_cube,
            "int_rho_squared": self.rho_square,
            "a2s_rho": self.a2s_rho,
            "min_quotient": self.min_quotient,
            "local_constant": self.local_constant,
            "rows": self.rows,
        }


def probe_strict(params: SpectralParams, eps_list=(0.05, 0.02, 0.01, -0.01, -0.02, -0.05),
                 budget: int = 4, seed: int = 0) -> StrictProbeResult:
    """Linear-in-eps coefficient of E(1 + eps rho) for the symmetric cubic-rich rho.

    The predicted slope is -S (p-1)(p-2)/3 int rho^3 / a_2s[rho] with S the
    sharp constant for the normalised measure, which is alpha(0).  The slope
    is fitted from odd differences (E(e) - E(-e)) / 2e, Richardson-extrapolated
    over the two smallest |e|; both signs of eps are evaluated.
    """
    if params.window != 0 or params.n != 2:
        raise InvalidParameterError("the strict probe needs n = 2 and s - n/2 in (0, 1)")
    rho = strict_test_function(2)
    grid = sphere.grid_for_degree(2, 16)
    r = rho.samples(grid)
    m3 = sphere.integrate(grid, r ** 3)
    m2 = sphere.integrate(grid, r ** 2)
    if not m3 > 0:
        raise ConvergenceError(f"int rho^3 = {m3:.3e} is not positive")
    a_rho = float(quadform.band_energies(rho, params, 2).sum())
    p = params.p
    factor = (p - 1) * (p - 2) / 3 * m3 / a_rho
    pred = -sobolev_constant_normalized(params) * factor
    pred_raw = -sobolev_constant(params) * factor

    rows = []
    values = {}
    for eps in eps_list:
        u = rho * float(eps) + 1.0
        u.require_positive(what=f"1 + {eps:g} rho")
        rep = quotient(u, params, budget=budget, seed=seed, check_invariance=False)
        values[float(eps)] = rep.quotient
        rows.append(_row(rep, epsilon=float(eps), predicted=local_constant(params) + pred * eps))
    mags = sorted({abs(e) for e in values if -e in values})
    if len(mags) < 2:
        raise InvalidParameterError("need at least two symmetric eps pairs to fit the slope")
    odd = {h: (values[h] - values[-h]) / (2 * h) for h in mags}
    h1, h2 = mags[0], mags[1]
    # odd part is slope*e + O(e^3): eliminate the cubic term
    slope = (h2 ** 2 * odd[h1] - h1 ** 2 * odd[h2]) / (h2 ** 2 - h1 ** 2)
    return StrictProbeResult(slope, pred, pred_raw, m3, m2, a_rho, min(values.values()),
                             local_constant(params), rows)


def bubble_study(params: SpectralParams, beta_list, budget: int = decompose.DEFAULT_BUDGET,
                 seed: int = 0) -> list[dict]:
    """Rows (beta, quotient, #critical points, attaining multiplicity) for the two-bubble field."""
    rows = []
    for beta in beta_list:
        u = two_bubble(params, float(beta))
        row = _row(None, beta=float(beta))
        try:
            rep = quotient(u, params, budget=budget, seed=seed, check_invariance=False)
        except (TruncationError, ConvergenceError) as exc:
            row.update(converged=False, error=str(exc))
            rows.append(row)
            continue
        cps = rep.decomposition.critical_points
        energies = cps.energies()
        row = _row(rep, beta=float(beta))
        row.update(critical_points=len(cps), multiplicity=rep.decomposition.multiplicity,
                   complete=cps.complete,
                   energy_levels=sorted({float(f"{e:.10g}") for e in energies}))
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# explorer

@dataclass
class Trajectory:
    steps: list
    stalled: bool
    seed: int

    def to_dict(self) -> dict:
        return {"steps": self.steps, "stalled": self.stalled, "seed": self.seed}


def _pack_high(n, L, x):
    packed = np.zeros(sphere.basis_dimension(n, L))
    packed[sphere.basis_dimension(n, 1):] = x
    return HarmonicField(n, packed)


def explore_min(params: SpectralParams, L: int = 4, iterations: int = 10, seed: int = 0,
                init: HarmonicField | None = None, margin: float = 1e-3,
                budget: int = 4, fd_step: float = 1e-6) -> Trajectory:
    """Projected finite-difference descent on E(1 + rho) over rho in E_2 + ... + E_L.

    Each accepted step is checked by a full decomposition; if a branch other
    than (1, 0) attains d, the field is pulled back so that branch becomes the
    constant, divided by c, and re-projected onto E_2..E_L.  Steps making
    min u <= ``margin`` are rejected.  This is a study tool and makes no
    claim about the value of the infimum.
    """
    if params.n != 2 or params.window != 0:
        raise InvalidParameterError("the explorer runs for n = 2 and s - n/2 in (0, 1)")
    if not 2 <= L <= 12:
        raise InvalidParameterError("explorer degree must lie in [2, 12]")
    rng = np.random.default_rng(seed)
    lo = sphere.basis_dimension(2, 1)
    dim = sphere.basis_dimension(2, L) - lo
    if init is None:
        rho0 = strict_test_function(2) * (-0.1)
        x = np.zeros(dim)
        x[:sphere.basis_dimension(2, 2) - lo] = rho0.packed[lo:]
    else:
        _require_high_band(init)
        x = np.zeros(dim)
        k = min(dim, len(init.packed) - lo)
        x[:k] = init.packed[lo:lo + k]
    if not np.any(x):
        raise OnManifoldError("initial rho = 0 is on the manifold")

    grid = sphere.grid_for_degree(2, max(sphere.DEFAULT_DEGREE[2], 2 * L))

    def objective(y):
        rho = _pack_high(2, L, y)
        if (rho + 1.0).samples(grid).min() <= margin:
            return math.inf
        return quotient_near_constant(rho, params)

    f = objective(x)
    if not math.isfinite(f):
        raise PositivityError("initial field violates the positivity margin")
    steps = []
    lr = 0.05 * np.linalg.norm(x)
    stalled = False
    for it in range(iterations):
        g = np.zeros(dim)
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = fd_step
            g[j] = (objective(x + e) - objective(x - e)) / (2 * fd_step)
        if not np.all(np.isfinite(g)) or np.linalg.norm(g) == 0:
            stalled = True
            break
        t = lr / np.linalg.norm(g)
        accepted = False
        while t * np.linalg.norm(g) > 1e-10:
            trial = x - t * g
            ft = objective(trial)
            if ft < f - 1e-4 * t * (g @ g):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            stalled = True
            break
        x, f = trial, ft
        lr = min(2 * t * np.linalg.norm(g), 0.5)
        u = _pack_high(2, L, x) + 1.0
        rep = quotient(u, params, budget=budget, seed=int(rng.integers(2 ** 31)),
                       check_invariance=False)
        best = rep.decomposition.argmin
        renorm = bool(np.linalg.norm(best.zeta) > 1e-8 or abs(best.c - 1) > 1e-8)
        if renorm:
            phi = map_for_bubble(best.zeta)
            w = pullback(u, phi, params) * (1.0 / best.c)
            coeffs = w.coefficients(max(L, 2 * L))
            x = coeffs[lo:sphere.basis_dimension(2, L)].copy()
            f = objective(x)
        profile = quadform.band_energies(_pack_high(2, L, x), params, L).tolist()
        steps.append({
            "iteration": it + 1,
            "quotient": rep.quotient,
            "objective": f,
            "min_u": rep.min_u,
            "distance": rep.distance,
            "renormalized": renorm,
            "band_energies": profile,
        })
    return Trajectory(steps, stalled, seed)


# ---------------------------------------------------------------------------
# asymptotic checks

def concentration_ratio(u: SphereField, params: SpectralParams, nu, t: float) -> float:
    """int u v_{t nu}^(p-1) / (u(nu) (1 - t)^(n/(2p)))."""
    nu = np.asarray(nu, dtype=float)
    nu = nu / np.linalg.norm(nu)
    nodes, weights = sphere.refined_grid(params.n, nu, 0.1 * (1 - t))
    G = float(np.sum(u(nodes) * decompose._weight(t * nu, params, nodes)[0] * weights))
    return G / (float(u(nu)[0]) * (1 - t) ** (params.n / (2 * params.p)))


def bubble_profile_quadrature(params: SpectralParams) -> float:
    """Radial quadrature of int_{R^n} (2/(1+|x|^2))^((n+2s)/2) dx."""
    n, s = params.n, params.s
    f = lambda r: (2 / (1 + r * r)) ** ((n + 2 * s) / 2) * r ** (n - 1)
    val, _ = integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-13, limit=400)
    return sphere_area(n - 1) * val


def balance_constant_quadrature(params: SpectralParams) -> float:
    """Radial quadrature of int_{R^n} (1-|x|^2)/(1+|x|^2) (2/(1+|x|^2))^((n+2s)/2) dx."""
    n, s = params.n, params.s
    f = lambda r: (1 - r * r) / (1 + r * r) * (2 / (1 + r * r)) ** ((n + 2 * s) / 2) * r ** (n - 1)
    val, _ = integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-13, limit=400)
    return sphere_area(n - 1) * val


def balance_errors(u: SphereField, params: SpectralParams, xi, deltas=(5, 10, 20, 40)) -> list[float]:
    """|G(delta, xi) - xi| over the dilation ladder."""
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    return [float(np.linalg.norm(balance_G(u, d, xi, params) - xi)) for d in deltas]
