"""Quadrature grids and real spherical-harmonic transforms on S^1 and S^2.

Coefficient vectors are packed by degree:

* ``n = 1``: index 0 is the constant; degree ``l >= 1`` occupies ``2l-1``
  (``cos(l theta)``, ``m = +1``) and ``2l`` (``sin(l theta)``, ``m = -1``).
* ``n = 2``: ``(l, m)`` with ``-l <= m <= l`` sits at ``l*l + l + m``;
  ``m > 0`` are cosine-type, ``m < 0`` sine-type real harmonics.

All bases are orthonormal for the unnormalized surface measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .exceptions import InvalidParameterError
from .specialfn import sphere_area

SUPPORTED_DIMENSIONS = (1, 2)
DEFAULT_DEGREE = {1: 64, 2: 48}


def _check_dimension(n):
    if n not in SUPPORTED_DIMENSIONS:
        raise InvalidParameterError(f"grids are only built for n in {{1, 2}}, got n={n}")


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Tensor quadrature on S^n.

    ``n = 1``: ``resolution`` equispaced angles (trapezoid rule).
    ``n = 2``: ``resolution`` Gauss-Legendre nodes in cos(theta) times
    ``2 * resolution`` equispaced azimuths.
    """

    n: int
    resolution: int
    nodes: np.ndarray
    weights: np.ndarray
    cos_theta: np.ndarray | None = None
    sin_theta: np.ndarray | None = None
    gl_weights: np.ndarray | None = None
    n_phi: int = 0

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def max_degree(self) -> int:
        """Largest l for which products of two degree <= l harmonics integrate exactly."""
        if self.n == 1:
            return (self.resolution - 1) // 2
        return self.resolution - 1


def build_grid(n: int, resolution: int) -> QuadratureGrid:
    _check_dimension(n)
    if int(resolution) != resolution or resolution < 8:
        raise InvalidParameterError(f"resolution must be an integer >= 8, got {resolution}")
    resolution = int(resolution)
    if n == 1:
        theta = 2 * np.pi * np.arange(resolution) / resolution
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(resolution, 2 * np.pi / resolution)
        return QuadratureGrid(1, resolution, nodes, weights)

    x, w = roots_legendre(resolution)
    n_phi = 2 * resolution
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    sin_t = np.sqrt((1 - x) * (1 + x))
    nodes = np.empty((resolution, n_phi, 3))
    nodes[..., 0] = sin_t[:, None] * np.cos(phi)[None, :]
    nodes[..., 1] = sin_t[:, None] * np.sin(phi)[None, :]
    nodes[..., 2] = x[:, None]
    weights = np.repeat(w * (2 * np.pi / n_phi), n_phi)
    return QuadratureGrid(
        2, resolution, nodes.reshape(-1, 3), weights,
        cos_theta=x, sin_theta=sin_t, gl_weights=w, n_phi=n_phi,
    )


def grid_resolution_for_degree(n: int, L: int) -> int:
    """Resolution that leaves a generous aliasing margin above degree ``L``."""
    _check_dimension(n)
    if n == 1:
        return max(8, 4 * L + 4)
    return max(8, (3 * L) // 2 + 2)


@lru_cache(maxsize=16)
def grid_for_degree(n: int, L: int) -> QuadratureGrid:
    return build_grid(n, grid_resolution_for_degree(n, L))


def _values(grid, f):
    vals = f(grid.nodes) if callable(f) else np.asarray(f, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if vals.shape != (grid.size,):
        raise InvalidParameterError(f"expected {grid.size} node values, got shape {vals.shape}")
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise InvalidParameterError(f"non-finite value at node {grid.nodes[i].tolist()}")
    return vals


def integrate(grid: QuadratureGrid, f) -> float:
    """Quadrature of a callable or of node values (numpy pairwise summation)."""
    return float(np.sum(grid.weights * _values(grid, f)))


# ---------------------------------------------------------------------------
# harmonic bases

def basis_dimension(n: int, L: int) -> int:
    return 2 * L + 1 if n == 1 else (L + 1) ** 2


def degree_multiplicity(n: int, ell: int) -> int:
    if ell == 0:
        return 1
    return 2 if n == 1 else 2 * ell + 1


def harmonic_index(n: int, ell: int, m: int) -> int:
    if n == 1:
        if ell == 0:
            if m != 0:
                raise InvalidParameterError("degree 0 on S^1 has only m = 0")
            return 0
        if m not in (1, -1):
            raise InvalidParameterError("on S^1, m must be +1 (cos) or -1 (sin)")
        return 2 * ell - 1 if m == 1 else 2 * ell
    if abs(m) > ell:
        raise InvalidParameterError(f"|m| must be <= l, got l={ell}, m={m}")
    return ell * ell + ell + m


@lru_cache(maxsize=8)
def degree_labels(n: int, L: int) -> np.ndarray:
    """Degree of every packed coefficient."""
    if n == 1:
        return np.concatenate([[0], np.repeat(np.arange(1, L + 1), 2)])
    return np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1)


def band_energies(n: int, coeffs: np.ndarray) -> np.ndarray:
    """||P_l f||^2 for l = 0..L from a packed coefficient vector."""
    L = _degree_of_length(n, len(coeffs))
    return np.bincount(degree_labels(n, L), weights=coeffs * coeffs, minlength=L + 1)


def band_products(n: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """<P_l f, P_l g> for l = 0..L."""
    L = _degree_of_length(n, len(a))
    return np.bincount(degree_labels(n, L), weights=a * b, minlength=L + 1)


def _degree_of_length(n, length):
    if n == 1:
        return (length - 1) // 2
    return math.isqrt(length) - 1


def truncate(n: int, coeffs: np.ndarray, L: int) -> np.ndarray:
    return coeffs[: basis_dimension(n, L)]


def _legendre_table(L: int, x: np.ndarray, sin_t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fully normalized associated Legendre values, m-major packing.

    Returns ``(table, offsets)`` with ``table[offsets[m] + l - m]`` holding
    P_lm(x) normalized so that 2*pi * int P_lm^2 dx = 1.  Upward recursion
    in l per m, started from the sectoral values.
    """
    npts = len(x)
    offsets = np.zeros(L + 2, dtype=int)
    for m in range(L + 1):
        offsets[m + 1] = offsets[m] + (L + 1 - m)
    table = np.empty((offsets[-1], npts))
    pmm = np.full(npts, math.sqrt(1 / (4 * math.pi)))
    for m in range(L + 1):
        if m > 0:
            pmm = pmm * sin_t * math.sqrt((2 * m + 1) / (2 * m))
        base = offsets[m]
        table[base] = pmm
        if m == L:
            break
        prev2 = pmm
        prev1 = math.sqrt(2 * m + 3) * x * pmm
        table[base + 1] = prev1
        for ell in range(m + 2, L + 1):
            a = math.sqrt((4 * ell * ell - 1) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1) ** 2 - m * m) / (4 * (ell - 1) ** 2 - 1))
            cur = a * (x * prev1 - b * prev2)
            table[base + ell - m] = cur
            prev2, prev1 = prev1, cur
    return table, offsets


@lru_cache(maxsize=4)
def _grid_legendre(resolution: int, L: int):
    grid = build_grid(2, resolution)
    return _legendre_table(L, grid.cos_theta, grid.sin_theta)


def evaluate_basis(n: int, L: int, points: np.ndarray) -> np.ndarray:
    """Matrix ``(len(points), dim)`` of all orthonormal harmonics up to degree ``L``."""
    _check_dimension(n)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if n == 1:
        theta = np.arctan2(points[:, 1], points[:, 0])
        out = np.empty((len(points), 2 * L + 1))
        out[:, 0] = 1 / math.sqrt(2 * math.pi)
        ell = np.arange(1, L + 1)
        out[:, 1::2] = np.cos(np.outer(theta, ell)) / math.sqrt(math.pi)
        out[:, 2::2] = np.sin(np.outer(theta, ell)) / math.sqrt(math.pi)
        return out
    z = np.clip(points[:, 2], -1.0, 1.0)
    sin_t = np.hypot(points[:, 0], points[:, 1])
    phi = np.arctan2(points[:, 1], points[:, 0])
    table, offsets = _legendre_table(L, z, sin_t)
    out = np.empty((len(points), (L + 1) ** 2))
    root2 = math.sqrt(2.0)
    for m in range(L + 1):
        rows = table[offsets[m]: offsets[m + 1]]
        ells = np.arange(m, L + 1)
        if m == 0:
            out[:, ells * ells + ells] = rows.T
        else:
            c = root2 * np.cos(m * phi)
            s = root2 * np.sin(m * phi)
            out[:, ells * ells + ells + m] = (rows * c).T
            out[:, ells * ells + ells - m] = (rows * s).T
    return out


def harmonic(n: int, ell: int, m: int):
    """Evaluator of a single orthonormal real harmonic."""
    idx = harmonic_index(n, ell, m)

    def f(points):
        return evaluate_basis(n, ell, points)[:, idx]

    return f


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    """Orthonormal real harmonics up to degree ``L`` together with an analysis grid."""

    n: int
    L: int
    grid: QuadratureGrid

    @classmethod
    def for_degree(cls, n: int, L: int, grid: QuadratureGrid | None = None) -> "HarmonicBasis":
        _check_dimension(n)
        if L < 0:
            raise InvalidParameterError(f"degree must be >= 0, got {L}")
        grid = grid if grid is not None else grid_for_degree(n, L)
        if L > grid.max_degree:
            raise InvalidParameterError(
                f"degree {L} exceeds the exactness of a resolution-{grid.resolution} grid "
                f"(max {grid.max_degree})"
            )
        return cls(n, L, grid)

    @property
    def dimension(self) -> int:
        return basis_dimension(self.n, self.L)

    def evaluate(self, points) -> np.ndarray:
        return evaluate_basis(self.n, self.L, points)

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Packed coefficients <f, Y_lm> from node values on ``self.grid``."""
        return analyze(self.grid, values, self.L)

    def gram(self) -> np.ndarray:
        Y = self.evaluate(self.grid.nodes)
        return Y.T @ (Y * self.grid.weights[:, None])


def analyze(grid: QuadratureGrid, values: np.ndarray, L: int) -> np.ndarray:
    """Quadrature of node values against every harmonic of degree <= L."""
    if L > grid.max_degree:
        raise InvalidParameterError(
            f"degree {L} exceeds the exactness of a resolution-{grid.resolution} grid "
            f"(max {grid.max_degree})"
        )
    values = np.asarray(values, dtype=float)
    if grid.n == 1:
        N = grid.resolution
        F = np.fft.rfft(values) * (2 * np.pi / N)
        out = np.empty(2 * L + 1)
        out[0] = F[0].real / math.sqrt(2 * np.pi)
        out[1::2] = F[1: L + 1].real / math.sqrt(np.pi)
        out[2::2] = -F[1: L + 1].imag / math.sqrt(np.pi)
        return out

    table, offsets = _grid_legendre(grid.resolution, L)
    F = np.fft.rfft(values.reshape(grid.resolution, grid.n_phi), axis=1)
    F = F[:, : L + 1] * (grid.gl_weights * (2 * np.pi / grid.n_phi))[:, None]
    re = np.ascontiguousarray(F.real.T)
    im = np.ascontiguousarray(F.imag.T)
    out = np.empty((L + 1) ** 2)
    root2 = math.sqrt(2.0)
    for m in range(L + 1):
        rows = table[offsets[m]: offsets[m + 1]]
        ells = np.arange(m, L + 1)
        if m == 0:
            out[ells * ells + ells] = rows @ re[0]
        else:
            out[ells * ells + ells + m] = root2 * (rows @ re[m])
            out[ells * ells + ells - m] = -root2 * (rows @ im[m])
    return out


def synthesize(n: int, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate a packed harmonic expansion at arbitrary unit vectors."""
    L = _degree_of_length(n, len(coeffs))
    return evaluate_basis(n, L, points) @ coeffs


def project(grid: QuadratureGrid, f, ell: int) -> float:
    """||P_l f||_2^2 computed on ``grid``."""
    if ell < 0 or ell > grid.max_degree:
        raise InvalidParameterError(
            f"degree {ell} is outside the exactness range 0..{grid.max_degree} of this grid"
        )
    return float(spectrum(grid, f, ell)[ell])


def spectrum(grid: QuadratureGrid, f, L: int) -> np.ndarray:
    """||P_l f||_2^2 for l = 0..L."""
    coeffs = analyze(grid, _values(grid, f), L)
    return band_energies(grid.n, coeffs)


# ---------------------------------------------------------------------------
# refined quadrature for integrands concentrated near one point

def _orthonormal_frame(center: np.ndarray) -> np.ndarray:
    """Rows: an orthonormal basis of the tangent space at ``center``."""
    d = len(center)
    M = np.eye(d) - np.outer(center, center)
    u, _, _ = np.linalg.svd(M)
    return u[:, : d - 1].T


def _graded_panels(width: float, stop: float, nodes_per_panel: int):
    edges = [0.0]
    h = width
    while edges[-1] + h < stop:
        edges.append(edges[-1] + h)
        h *= 2
    edges.append(stop)
    x, w = roots_legendre(nodes_per_panel)
    t, tw = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        t.append(0.5 * (b - a) * x + 0.5 * (a + b))
        tw.append(0.5 * (b - a) * w)
    return np.concatenate(t), np.concatenate(tw)


def refined_grid(n: int, center, width: float, nodes_per_panel: int = 24, n_phi: int = 96):
    """Nodes and weights on S^n graded geometrically in geodesic distance from ``center``.

    Panels start at ``width`` and double in size; suited for integrands that
    concentrate at ``center`` on the length scale ``width``.
    """
    _check_dimension(n)
    center = np.asarray(center, dtype=float)
    center = center / np.linalg.norm(center)
    frame = _orthonormal_frame(center)
    theta, tw = _graded_panels(width, np.pi, nodes_per_panel)
    if n == 1:
        e = frame[0]
        th = np.concatenate([-theta[::-1], theta])
        w = np.concatenate([tw[::-1], tw])
        nodes = np.cos(th)[:, None] * center + np.sin(th)[:, None] * e
        return nodes, w
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    ct, st = np.cos(theta), np.sin(theta)
    dirs = np.cos(phi)[:, None] * frame[0] + np.sin(phi)[:, None] * frame[1]
    nodes = ct[:, None, None] * center + st[:, None, None] * dirs[None, :, :]
    w = (tw * st)[:, None] * np.full(n_phi, 2 * np.pi / n_phi)[None, :]
    return nodes.reshape(-1, 3), w.reshape(-1)


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SO(d)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_unit_vectors(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((k, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sphere_mesh(n: int) -> np.ndarray:
    """Coarse deterministic mesh: the +-coordinate axes and the cube diagonals."""
    _check_dimension(n)
    d = n + 1
    axes = np.vstack([np.eye(d), -np.eye(d)])
    signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * d)).reshape(d, -1).T
    diag = signs / math.sqrt(d)
    return np.vstack([axes, diag])


def total_area(n: int) -> float:
    return sphere_area(n)
