"""Orthogonal decomposition u = c v_zeta + rho and the modified distance d(u).

The critical-point system is

    F_0 = a_2s[u - c v_zeta, v_zeta],   F_i = a_2s[u - c v_zeta, d v_zeta / d zeta_i].

Because A_2s v_zeta = alpha(0) v_zeta^(p-1), it is equivalent to
``F_0 = alpha(0) (G(zeta) - c |S^n|)`` and ``F_i = alpha(0) dG/dzeta_i`` with
``G(zeta) = int u v_zeta^(p-1)``.  Newton runs on this quadrature form (no
spectral transform per iteration); every converged point is then checked
against the spectral form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from . import sphere
from . import quadform
from .conformal import Bubble, bubble_eval, bubble_degree_hint, tangent_frame, ZETA_CLAMP
from .exceptions import (ConvergenceError, InvariantError, InvalidParameterError,
                         OnManifoldError)
from .field import SphereField, pnorm, max_degree
from .specialfn import SpectralParams, alpha, sphere_area

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
ORTHOGONALITY_TOL = 1e-8
IDENTITY_TOL = 1e-6
DEDUP_TOL = 1e-6
TIE_TOL = 1e-9
ON_MANIFOLD_TOL = 1e-9
FD_STEP = 1e-6
MAX_ITER = 80
DEFAULT_BUDGET = 16


# ---------------------------------------------------------------------------
# G and the quadrature residual

def _weight(zeta, params, points):
    """v_zeta^(p-1) = (1-|zeta|^2)^(b/2) (1 - zeta.omega)^(-b), b = (n+2s)/2."""
    b = (params.n + 2 * params.s) / 2
    z2 = float(zeta @ zeta)
    dot = 1 - points @ zeta
    return (1 - z2) ** (b / 2) * dot ** (-b), dot, b, z2


def solve_grid(u: SphereField, zeta, params: SpectralParams) -> sphere.QuadratureGrid:
    """Grid resolving u against v_zeta^(p-1); degrees rounded up to a multiple of 16."""
    r = float(np.linalg.norm(zeta))
    L = max(sphere.DEFAULT_DEGREE[u.n], u.degree_hint, bubble_degree_hint(r, params))
    L = min(max_degree(u.n), 16 * math.ceil(L / 16))
    return sphere.grid_for_degree(u.n, L)


def g_functional(u: SphereField, zeta, params: SpectralParams, grid=None) -> float:
    """G(zeta) = int u v_zeta^(p-1)."""
    zeta = np.asarray(zeta, dtype=float)
    grid = grid or solve_grid(u, zeta, params)
    w = _weight(zeta, params, grid.nodes)[0]
    return sphere.integrate(grid, u.samples(grid) * w)


def g_and_gradient(u: SphereField, zeta, params: SpectralParams, grid=None):
    """G(zeta) and its zeta-gradient by differentiating under the integral."""
    zeta = np.asarray(zeta, dtype=float)
    grid = grid or solve_grid(u, zeta, params)
    w, dot, b, z2 = _weight(zeta, params, grid.nodes)
    uw = u.samples(grid) * w * grid.weights
    G = float(np.sum(uw))
    # d w / d zeta_i = w (-b zeta_i / (1-|zeta|^2) + b omega_i / (1 - zeta.omega))
    grad = -b * zeta / (1 - z2) * G + b * (grid.nodes / dot[:, None]).T @ uw
    return G, grad


def residual_quadrature(u: SphereField, c: float, zeta, params: SpectralParams, grid=None) -> np.ndarray:
    """The residual vector (F_0, F_1, ..., F_{n+1}) through G."""
    G, grad = g_and_gradient(u, zeta, params, grid)
    a0 = alpha(params, 0)
    return a0 * np.concatenate([[G - c * sphere_area(params.n)], grad])


def residual_F(u: SphereField, c: float, zeta, params: SpectralParams, L: int | None = None) -> np.ndarray:
    """Residual computed spectrally as a_2s[u - c v_zeta, .] on the tangent frame."""
    zeta = np.asarray(zeta, dtype=float)
    frame = tangent_frame(Bubble(1.0, zeta, params))
    if L is None:
        L = max(quadform.converged_degree(f, params) for f in [u] + frame)
    rho = u - c * frame[0]
    return np.array([quadform.a2s_bilinear(rho, f, params, L) for f in frame])


# ---------------------------------------------------------------------------
# results

@dataclass
class Decomposition:
    """u = c v_zeta + rho with rho a_2s-orthogonal to the tangent space at c v_zeta."""

    c: float
    zeta: np.ndarray
    params: SpectralParams
    residual_norm: float
    rho_energy: float
    rho_energy_identity: float
    orthogonality: float
    scale: float
    branch: str
    iterations: int = 0
    G: float = float("nan")

    @property
    def bubble(self) -> Bubble:
        return Bubble(self.c, self.zeta, self.params)

    def remainder(self, u: SphereField) -> SphereField:
        return u - bubble_eval(self.bubble)

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "zeta": [float(z) for z in self.zeta],
            "residual_norm": self.residual_norm,
            "rho_energy": self.rho_energy,
            "rho_energy_identity": self.rho_energy_identity,
            "orthogonality": self.orthogonality,
            "scale": self.scale,
            "branch": self.branch,
            "iterations": self.iterations,
        }


@dataclass
class CriticalPointSet:
    """Distinct decompositions, sorted by descending c then lexicographic zeta."""

    points: list
    complete: bool
    starts: int = 0
    failures: int = 0
    notes: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def energies(self) -> np.ndarray:
        return np.array([d.rho_energy for d in self.points])

    def to_dict(self) -> dict:
        return {
            "complete": self.complete,
            "starts": self.starts,
            "failures": self.failures,
            "points": [d.to_dict() for d in self.points],
        }


def _canonical_key(d: Decomposition):
    return (-round(d.c, 9),) + tuple(round(float(z), 9) for z in d.zeta)


# ---------------------------------------------------------------------------
# Newton

def _clamp_step(zeta, step, limit):
    """Largest t in (0, 1] with |zeta + t step| <= limit."""
    new = zeta + step
    if np.linalg.norm(new) <= limit:
        return 1.0
    # solve |zeta + t step| = limit for t
    a = step @ step
    b = 2 * zeta @ step
    c = zeta @ zeta - limit ** 2
    disc = max(b * b - 4 * a * c, 0.0)
    t = (-b + math.sqrt(disc)) / (2 * a)
    return max(0.0, min(1.0, t))


def _fd_jacobian(fun, x, f0, h=FD_STEP):
    J = np.empty((len(f0), len(x)))
    for j in range(len(x)):
        e = np.zeros(len(x))
        e[j] = h
        J[:, j] = (fun(x + e) - fun(x - e)) / (2 * h)
    return J


def newton(u: SphereField, c0: float, zeta0, params: SpectralParams, scale: float,
           max_iter: int = MAX_ITER, tol: float | None = None, polish: int = 4):
    """Damped Newton on (c, zeta); returns (c, zeta, residual, iterations) or raises.

    After the residual gate is met, up to ``polish`` further steps are taken
    while they still reduce |F|, and c is reset to its exact value G(zeta)/|S^n|.
    The gate is relative to the field scale, which for rough fields is loose.
    """
    if tol is None:
        tol = RESIDUAL_TOL
    zeta0 = np.asarray(zeta0, dtype=float)
    if not np.linalg.norm(zeta0) < 1:
        raise InvalidParameterError("initial zeta must lie in the open unit ball")
    clamp = ZETA_CLAMP[params.n]
    if np.linalg.norm(zeta0) > clamp:
        zeta0 = zeta0 * (clamp / np.linalg.norm(zeta0))
    x = np.concatenate([[c0], zeta0])
    area = sphere_area(params.n)

    def fun(y):
        return residual_quadrature(u, y[0], y[1:], params)

    F = fun(x)
    pinned = 0
    extra = 0
    it = 0
    while it < max_iter:
        gate = np.max(np.abs(F)) < tol * scale
        if gate and extra >= polish:
            break
        it += 1
        J = _fd_jacobian(fun, x, F)
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        t = _clamp_step(x[1:], step[1:], clamp)
        phi0 = F @ F
        accepted = False
        while t > 1e-6:
            trial = x + t * step
            if trial[0] > 0:
                Ft = fun(trial)
                if Ft @ Ft < phi0:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            if gate:
                break
            raise ConvergenceError(f"line search stalled at iteration {it}, |F| = {math.sqrt(phi0):.3e}")
        if gate:
            extra += 1
            if Ft @ Ft > 0.25 * phi0:
                x, F = trial, Ft
                break
        x, F = trial, Ft
        if np.linalg.norm(x[1:]) >= clamp - 1e-9:
            pinned += 1
            if pinned >= 3:
                raise ConvergenceError("iterate trapped at the |zeta| clamp")
        else:
            pinned = 0
    if not np.max(np.abs(F)) < tol * scale:
        raise ConvergenceError(f"no convergence in {max_iter} iterations, max|F| = {np.max(np.abs(F)):.3e}")
    # F_0 is linear in c
    x[0] = g_functional(u, x[1:], params) / area
    F = fun(x)
    return x[0], x[1:], float(np.max(np.abs(F))), it


def verify_point(u: SphereField, c: float, zeta, params: SpectralParams, scale: float,
                 a2s_u: float, branch: str = "", iterations: int = 0) -> Decomposition:
    """Spectral gates on a converged point: residual, orthogonality, energy identity, sign."""
    zeta = np.asarray(zeta, dtype=float)
    unit = Bubble(1.0, zeta, params)
    frame = tangent_frame(unit)
    L = max(quadform.converged_degree(f, params) for f in [u] + frame)
    rho = u - c * frame[0]
    F = np.array([quadform.a2s_bilinear(rho, f, params, L) for f in frame])
    # a tangent-frame vector normalised to the size of c v_zeta
    ortho = float(np.max(np.abs(F[1:]) * c)) if len(F) > 1 else 0.0
    rho_energy = float(quadform.band_energies(rho, params, L).sum())
    identity = a2s_u - alpha(params, 0) * c * c * sphere_area(params.n)
    res = float(np.max(np.abs(F)))
    d = Decomposition(c=float(c), zeta=zeta, params=params, residual_norm=res,
                      rho_energy=rho_energy, rho_energy_identity=identity,
                      orthogonality=ortho, scale=scale, branch=branch,
                      iterations=iterations, G=g_functional(u, zeta, params))
    problems = []
    if res >= ORTHOGONALITY_TOL * scale:
        problems.append(f"spectral residual {res:.3e}")
    if ortho >= ORTHOGONALITY_TOL * scale:
        problems.append(f"tangent orthogonality {ortho:.3e}")
    if abs(rho_energy - identity) > IDENTITY_TOL * max(abs(identity), 1e-6 * scale):
        problems.append(f"rho energy {rho_energy:.12g} vs identity {identity:.12g}")
    if rho_energy < -ORTHOGONALITY_TOL * scale:
        problems.append(f"negative rho energy {rho_energy:.3e}")
    if problems:
        raise InvariantError(f"decomposition at c={c:.9g}, zeta={zeta.tolist()} fails: "
                             + "; ".join(problems))
    return d


def solve_branch(u: SphereField, init, params: SpectralParams, branch: str = "init",
                 scale: float | None = None, a2s_u: float | None = None) -> Decomposition:
    """Solve the decomposition system from ``init = (c0, zeta0)``.

    Raises
    ------
    ConvergenceError
        Newton failed (iteration cap, stalled line search, or boundary trap).
    InvariantError
        Newton converged but the spectral gates failed.
    """
    c0, zeta0 = init
    if a2s_u is None or scale is None:
        a2s_u, diag = quadform.a2s(u, params)
        scale = diag.scale
    c, zeta, _, it = newton(u, float(c0), zeta0, params, scale)
    return verify_point(u, c, zeta, params, scale, a2s_u, branch, it)


# ---------------------------------------------------------------------------
# multistart

def center_of_mass_start(u: SphereField, params: SpectralParams):
    """zeta from the first moment of u, c from G(zeta) / |S^n|."""
    grid = u.default_grid()
    vals = u.samples(grid)
    m = (grid.nodes * (vals * grid.weights)[:, None]).sum(axis=0) / np.sum(vals * grid.weights)
    # v_zeta = 1 - a zeta.omega + O(|zeta|^2), so the first moment is -a zeta / (n+1)
    zeta = -(params.n + 1) / params.bubble_exponent * m
    r = np.linalg.norm(zeta)
    if r > 0.9:
        zeta *= 0.9 / r
    return g_functional(u, zeta, params) / sphere_area(params.n), zeta


def g_minimum_start(u: SphereField, params: SpectralParams, zeta0=None):
    """Global minimizer of G, a critical point because G blows up at the boundary.

    BFGS runs in x with zeta = x / sqrt(1 + |x|^2), so the ball is never left.
    """
    def obj(x):
        r2 = x @ x
        q = 1 + r2
        zeta = x / math.sqrt(q)
        G, grad = g_and_gradient(u, zeta, params)
        J = (np.eye(len(x)) * q - np.outer(x, x)) / q ** 1.5
        return G, J.T @ grad

    z = np.zeros(params.n + 1) if zeta0 is None else np.asarray(zeta0, dtype=float)
    x0 = z / math.sqrt(max(1e-12, 1 - z @ z))
    res = minimize(obj, x0, jac=True, method="BFGS", options={"gtol": 1e-10, "maxiter": 400})
    x = res.x
    return x / math.sqrt(1 + x @ x)


RAY_RADII = np.array([0.0, 0.15, 0.3, 0.45, 0.6, 0.7, 0.8, 0.88, 0.93, 0.96, 0.98])


def ray_starts(u: SphereField, params: SpectralParams, radii=RAY_RADII):
    """Starts from sign changes of the radial derivative of G along mesh directions.

    zeta = t xi corresponds to the dilation delta = sqrt((1+t)/(1-t)) about xi, so
    this is the continuation in delta of the balance construction.
    """
    starts = []
    for xi in sphere.sphere_mesh(params.n):
        xi = xi / np.linalg.norm(xi)
        radial = []
        for t in radii:
            G, grad = g_and_gradient(u, t * xi, params)
            radial.append(grad @ xi)
        radial = np.array(radial)
        for k in range(len(radii) - 1):
            if radial[k] == 0 or radial[k] * radial[k + 1] < 0:
                t = radii[k] - radial[k] * (radii[k + 1] - radii[k]) / (radial[k + 1] - radial[k])
                starts.append(t * xi)
        k = int(np.argmin(np.abs(radial)))
        starts.append(radii[k] * xi)
    return starts


def _same_point(a: Decomposition, b: Decomposition) -> bool:
    return (abs(a.c - b.c) <= DEDUP_TOL * max(1.0, abs(a.c))
            and np.max(np.abs(a.zeta - b.zeta)) <= DEDUP_TOL)


def enumerate_critical_points(u: SphereField, params: SpectralParams, budget: int = DEFAULT_BUDGET,
                              seed: int = 0) -> CriticalPointSet:
    """Multistart enumeration of solutions of the decomposition system.

    Starts: the center-of-mass guess, the minimizer of G, radial sign changes of dG along a
    mesh of directions, then ``budget`` random points in the ball of radius
    0.9.  The set is flagged complete when no start failed and the random
    restarts found nothing the deterministic starts had not.
    """
    if budget < 0:
        raise InvalidParameterError("budget must be >= 0")
    u.require_positive(what="input field")
    a2s_u, diag = quadform.a2s(u, params)
    scale = diag.scale
    rng = np.random.default_rng(seed)

    com = center_of_mass_start(u, params)[1]
    starts = [("center_of_mass", com), ("g_minimum", g_minimum_start(u, params, com))]
    starts += [(f"ray{k}", z) for k, z in enumerate(ray_starts(u, params))]
    n_det = len(starts)
    for k in range(budget):
        z = sphere.random_unit_vectors(params.n + 1, 1, rng)[0]
        starts.append((f"random{k}", z * 0.9 * rng.uniform() ** (1 / (params.n + 1))))

    found: list[Decomposition] = []
    failures = 0
    new_from_random = False
    notes = []
    for k, (label, z0) in enumerate(starts):
        c0 = g_functional(u, z0, params) / sphere_area(params.n)
        try:
            d = solve_branch(u, (c0, z0), params, label, scale, a2s_u)
        except (ConvergenceError, InvariantError) as exc:
            failures += 1
            notes.append(f"{label}: {exc}")
            log.debug("branch %s failed: %s", label, exc)
            continue
        if not any(_same_point(d, e) for e in found):
            found.append(d)
            if k >= n_det:
                new_from_random = True
    if not found:
        raise ConvergenceError(
            "no critical point found; existence is guaranteed, so this is a numerical breakdown")
    found.sort(key=_canonical_key)
    return CriticalPointSet(found, complete=(failures == 0 and not new_from_random),
                            starts=len(starts), failures=failures, notes=notes)


@dataclass
class DistanceResult:
    value: float
    argmin: Decomposition
    attaining: list
    critical_points: CriticalPointSet
    deficit: float
    scale: float

    @property
    def multiplicity(self) -> int:
        return len(self.attaining)

    def to_dict(self) -> dict:
        return {
            "distance": self.value,
            "argmin": self.argmin.to_dict(),
            "multiplicity": self.multiplicity,
            "complete": self.critical_points.complete,
            "critical_points": self.critical_points.to_dict(),
        }


def distance(u: SphereField, params: SpectralParams, budget: int = DEFAULT_BUDGET,
             seed: int = 0) -> DistanceResult:
    """d(u): the least rho-energy over all decompositions of u.

    Raises
    ------
    OnManifoldError
        If u is a bubble within tolerance, where d(u) is zero and the quotient undefined.
    """
    defc, diag = quadform.deficit(u, params, return_diagnostics=True)
    scale = diag.scale
    cps = enumerate_critical_points(u, params, budget, seed)
    energies = cps.energies()
    best = float(energies.min())
    if defc < ON_MANIFOLD_TOL * scale and best < ON_MANIFOLD_TOL * scale:
        raise OnManifoldError("input lies on the optimizer manifold; d(u) = 0")
    if not best > 0:
        raise InvariantError(f"d(u) = {best:.3e} is not positive off the manifold")
    attaining = [d for d in cps.points if d.rho_energy - best <= TIE_TOL * scale]
    return DistanceResult(best, attaining[0], attaining, cps, defc, scale)


def reverse_holder_lower_bound(u: SphereField, params: SpectralParams) -> float:
    """||u||_p |S^n|^(-1/p); every critical c is at least this."""
    grid = u.default_grid()
    return pnorm(u, params.p, grid) * sphere_area(params.n) ** (-1 / params.p)


def axis_scan(u: SphereField, params: SpectralParams, axis, t_grid) -> list[float]:
    """Critical points of t -> G(t axis) from sign changes of its derivative.

    For fields symmetric about ``axis`` every critical point of G lies on
    the axis, so this is an independent one-dimensional enumeration.
    """
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    d = np.array([g_and_gradient(u, t * axis, params)[1] @ axis for t in t_grid])
    roots = []
    for k in range(len(t_grid) - 1):
        if d[k] == 0:
            roots.append(float(t_grid[k]))
        elif d[k] * d[k + 1] < 0:
            roots.append(brentq(lambda t: g_and_gradient(u, t * axis, params)[1] @ axis,
                                t_grid[k], t_grid[k + 1], xtol=1e-13))
    return roots
