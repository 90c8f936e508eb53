"""Stereographic projection, conformal maps of S^n, bubbles and the balance functional.

A conformal map is stored as ``Phi = R o gamma_{delta, xi}`` with
``gamma_{delta, xi} = O_xi^T o S o D_delta o S^{-1} o O_xi``.  Its Jacobian
depends only on ``t = xi . omega`` and never needs a matrix determinant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sphere
from .exceptions import InvalidParameterError
from .field import SphereField, LinearCombination, max_degree
from .specialfn import SpectralParams, balance_normalizer

# Newton keeps |zeta| below this; n=1 minimizers can sit very near the boundary
ZETA_CLAMP = {1: 0.9998, 2: 0.995}
_ZETA_LIMIT = 1 - 1e-12


# ---------------------------------------------------------------------------
# stereographic projection (center S = -e_{n+1})

def stereo(x):
    """Inverse stereographic projection R^n -> S^n and its Jacobian (2/(1+|x|^2))^n."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r2 = np.sum(x * x, axis=1)
    omega = np.column_stack([2 * x / (1 + r2)[:, None], (1 - r2) / (1 + r2)])
    J = (2 / (1 + r2)) ** x.shape[1]
    return omega, J


def stereo_inv(omega):
    """Stereographic projection S^n \\ {S} -> R^n and its Jacobian (1+omega_{n+1})^(-n)."""
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    last = omega[:, -1]
    if np.any(1 + last <= 1e-15):
        raise InvalidParameterError("stereographic projection is undefined at the south pole")
    n = omega.shape[1] - 1
    return omega[:, :-1] / (1 + last)[:, None], (1 + last) ** (-n)


def rotation_to_north(xi) -> np.ndarray:
    """Orthogonal O with O xi = e_{n+1}; a rotation in the xi-e_{n+1} plane.

    Near the south pole a half turn in the (e_1, e_{n+1}) plane is applied first
    so the plane rotation never degenerates.
    """
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    d = len(xi)
    north = np.zeros(d)
    north[-1] = 1.0
    pre = np.eye(d)
    if xi[-1] < -0.9:
        pre[0, 0] = pre[-1, -1] = -1.0
        xi = pre @ xi
    c = float(xi @ north)
    K = np.outer(north, xi) - np.outer(xi, north)
    R = np.eye(d) + K + (K @ K) / (1 + c)
    return R @ pre


@dataclass(frozen=True, eq=False)
class ConformalMap:
    """``omega -> rotation @ gamma_{delta, xi}(omega)``."""

    delta: float
    xi: np.ndarray
    rotation: np.ndarray = None
    O: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if not self.delta > 0:
            raise InvalidParameterError(f"dilation must be positive, got {self.delta}")
        xi = xi / np.linalg.norm(xi)
        object.__setattr__(self, "xi", xi)
        d = len(xi)
        R = np.eye(d) if self.rotation is None else np.asarray(self.rotation, dtype=float)
        if R.shape != (d, d) or np.abs(R.T @ R - np.eye(d)).max() > 1e-12:
            raise InvalidParameterError("rotation must be an orthogonal matrix")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "O", rotation_to_north(xi))

    @property
    def n(self) -> int:
        return len(self.xi) - 1

    @classmethod
    def identity(cls, n: int) -> "ConformalMap":
        xi = np.zeros(n + 1)
        xi[-1] = 1
        return cls(1.0, xi)

    @classmethod
    def rotation_only(cls, R) -> "ConformalMap":
        R = np.asarray(R, dtype=float)
        xi = np.zeros(len(R))
        xi[-1] = 1
        return cls(1.0, xi, R)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, delta_max: float = 3.0) -> "ConformalMap":
        delta = float(rng.uniform(1.0, delta_max))
        xi = sphere.random_unit_vectors(n + 1, 1, rng)[0]
        return cls(delta, xi, sphere.random_rotation(n + 1, rng))

    def _t_and_denominator(self, points):
        t = points @ self.xi
        d2 = self.delta ** 2
        return t, (1 + t) + d2 * (1 - t)

    def __call__(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        local = points @ self.O.T
        t, D = self._t_and_denominator(points)
        d2 = self.delta ** 2
        img = np.empty_like(local)
        img[:, :-1] = 2 * self.delta * local[:, :-1] / D[:, None]
        img[:, -1] = ((1 + t) - d2 * (1 - t)) / D
        return (img @ self.O) @ self.rotation.T

    def jacobian(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        _, D = self._t_and_denominator(points)
        return (2 * self.delta / D) ** self.n

    def inverse(self) -> "ConformalMap":
        # gamma_{1/delta, xi} o R^T = R^T o gamma_{1/delta, R xi}
        return ConformalMap(1.0 / self.delta, self.rotation @ self.xi, self.rotation.T)

    @property
    def bubble_center(self) -> np.ndarray:
        """zeta with 1_Phi = v_zeta exactly."""
        d2 = self.delta ** 2
        return (d2 - 1) / (d2 + 1) * self.xi

    def to_dict(self) -> dict:
        return {"delta": self.delta, "xi": self.xi.tolist(), "rotation": self.rotation.tolist()}


def map_for_bubble(zeta) -> ConformalMap:
    """gamma_{delta, xi} whose pullback of the constant 1 is v_zeta."""
    zeta = np.asarray(zeta, dtype=float)
    r = float(np.linalg.norm(zeta))
    if r >= 1:
        raise InvalidParameterError("|zeta| must be < 1")
    if r == 0:
        return ConformalMap.identity(len(zeta) - 1)
    return ConformalMap(math.sqrt((1 + r) / (1 - r)), zeta / r)


def pullback(u: SphereField, phi: ConformalMap, params: SpectralParams) -> SphereField:
    """u_Phi(omega) = u(Phi(omega)) J_Phi(omega)^((n-2s)/(2n))."""
    if phi.n != u.n or params.n != u.n:
        raise InvalidParameterError("dimension mismatch between field, map and parameters")
    expo = 1.0 / params.p

    def f(points):
        return u(phi(points)) * phi.jacobian(points) ** expo

    spread = max(phi.delta, 1 / phi.delta)
    hint = max(u.degree_hint, bubble_degree_hint(np.linalg.norm(phi.bubble_center), params))
    hint = int(min(max_degree(u.n), max(hint, math.ceil(u.degree_hint * spread))))
    return SphereField(u.n, f, hint, label=f"pullback of [{u.label}]")


# ---------------------------------------------------------------------------
# bubbles

def bubble_degree_hint(radius: float, params: SpectralParams) -> int:
    """Degree where the harmonic tail of v_zeta with |zeta| = radius is negligible."""
    if radius <= 0:
        return 0
    r = radius / (1 + math.sqrt(max(0.0, 1 - radius * radius)))
    L = 16
    for _ in range(3):
        L = math.ceil((9 * math.log(10) + (params.s + 1) * math.log(max(L, 2))) / -math.log(r))
    return int(min(max_degree(params.n), max(8, L)))


@dataclass(frozen=True, eq=False)
class Bubble:
    """The manifold element c * v_zeta."""

    c: float
    zeta: np.ndarray
    params: SpectralParams

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=float).reshape(-1)
        if len(zeta) != self.params.n + 1:
            raise InvalidParameterError(f"zeta must have {self.params.n + 1} components")
        if not np.linalg.norm(zeta) < _ZETA_LIMIT:
            raise InvalidParameterError(f"|zeta| = {np.linalg.norm(zeta):.15f} is not < 1")
        if not self.c > 0:
            raise InvalidParameterError(f"bubble amplitude must be positive, got {self.c}")
        object.__setattr__(self, "zeta", zeta)

    @property
    def degree_hint(self) -> int:
        return bubble_degree_hint(float(np.linalg.norm(self.zeta)), self.params)

    def value(self, points) -> np.ndarray:
        a = self.params.bubble_exponent
        z2 = float(self.zeta @ self.zeta)
        return self.c * (1 - z2) ** (-a / 2) * (1 - points @ self.zeta) ** a

    def dzeta(self, points, i: int) -> np.ndarray:
        a = self.params.bubble_exponent
        z2 = float(self.zeta @ self.zeta)
        dot = 1 - points @ self.zeta
        return self.value(points) * (a * self.zeta[i] / (1 - z2) - a * points[:, i] / dot)

    def to_dict(self) -> dict:
        return {"c": self.c, "zeta": self.zeta.tolist()}


def bubble_eval(b: Bubble) -> SphereField:
    """c (1-|zeta|^2)^(-(2s-n)/4) (1 - zeta.omega)^((2s-n)/2) as a field."""
    return SphereField(b.params.n, b.value, b.degree_hint,
                       label=f"bubble c={b.c:.6g} zeta={np.round(b.zeta, 6).tolist()}")


def bubble_dzeta(b: Bubble, i: int) -> SphereField:
    """Analytic partial derivative of c v_zeta in zeta_i."""
    if not 0 <= i <= b.params.n:
        raise InvalidParameterError(f"zeta index {i} out of range")
    return SphereField(b.params.n, lambda x: b.dzeta(x, i), b.degree_hint + 8,
                       label=f"d/dzeta_{i + 1} of bubble")


def bubble_sum(bubbles) -> SphereField:
    bubbles = list(bubbles)
    return LinearCombination.of([(1.0, bubble_eval(b)) for b in bubbles])


def tangent_frame(b: Bubble) -> list[SphereField]:
    """v_zeta and its zeta-derivatives: a spanning set of the tangent space at c v_zeta."""
    unit = Bubble(1.0, b.zeta, b.params)
    return [bubble_eval(unit)] + [bubble_dzeta(unit, i) for i in range(b.params.n + 1)]


def two_bubble(params: SpectralParams, beta: float) -> SphereField:
    """(1 + beta omega_{n+1})^((n-2s)/2) + (1 - beta omega_{n+1})^((n-2s)/2).

    Each summand peaks at one pole like a concentrating profile.  Note the
    exponent is (n-2s)/2; with the manifold exponent (2s-n)/2 the sum is
    a genuine pair of bubbles, whose decomposition is unique.
    """
    if not 0 < beta < 1:
        raise InvalidParameterError(f"beta must lie in (0, 1), got {beta}")
    e = -params.bubble_exponent

    def f(x):
        t = x[:, -1]
        return (1 + beta * t) ** e + (1 - beta * t) ** e

    hint = bubble_degree_hint(beta, params)
    return SphereField(params.n, f, hint, label=f"two-bubble beta={beta:g}")


def bubble_pair(params: SpectralParams, beta: float) -> SphereField:
    """v_{beta e} + v_{-beta e}: the sum of two manifold elements at antipodal centers."""
    e = np.zeros(params.n + 1)
    e[-1] = beta
    return bubble_sum([Bubble(1.0, e, params), Bubble(1.0, -e, params)])


# ---------------------------------------------------------------------------
# balance condition

def balance_integrand(u: SphereField, delta: float, xi, params: SpectralParams):
    """Vector-valued integrand gamma(omega) J_gamma(omega)^((n+2s)/(2n)) u(omega)."""
    phi = ConformalMap(delta, xi)
    expo = (params.n + 2 * params.s) / (2 * params.n)

    def f(points):
        w = phi.jacobian(points) ** expo * u(points)
        return phi(points) * w[:, None]

    return f


def balance_F(u: SphereField, delta: float, xi, params: SpectralParams,
              refined_above: float = 10.0) -> np.ndarray:
    """First-moment vector of the pullback; zero iff the pullback is centred.

    For ``delta <= refined_above`` the fixed tensor grid is used (resolution
    raised with delta).  Beyond that the integrand concentrates in a cap of
    radius ~1/delta around ``xi`` and a grid graded from ``xi`` on that scale
    is used instead (the dilated stereographic substitution written on the
    sphere).
    """
    if delta < 1:
        raise InvalidParameterError(f"delta must be >= 1, got {delta}")
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    f = balance_integrand(u, delta, xi, params)
    if delta <= refined_above:
        radius = (delta ** 2 - 1) / (delta ** 2 + 1)
        L = max(sphere.DEFAULT_DEGREE[u.n], u.degree_hint, bubble_degree_hint(radius, params))
        grid = sphere.grid_for_degree(u.n, min(L, max_degree(u.n)))
        nodes, weights = grid.nodes, grid.weights
    else:
        nodes, weights = sphere.refined_grid(u.n, xi, 0.25 / delta)
    vals = f(nodes)
    if not np.all(np.isfinite(vals)):
        raise InvalidParameterError("balance integrand is not finite on the grid")
    return np.sum(vals * weights[:, None], axis=0)


def balance_G(u: SphereField, delta: float, xi, params: SpectralParams) -> np.ndarray:
    """delta^((n-2s)/2) F(delta, xi) / (c u(xi)); tends to xi as delta -> infinity."""
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    F = balance_F(u, delta, xi, params)
    scale = delta ** ((params.n - 2 * params.s) / 2)
    return scale * F / (balance_normalizer(params) * float(u(xi)[0]))
