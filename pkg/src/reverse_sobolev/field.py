"""Positive functions on S^n, negative-exponent norms, reverse Hoelder gap."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from . import sphere
from .exceptions import InvalidParameterError, PositivityError

# fields whose grid minimum is at or below this are not "positive"
POSITIVITY_THRESHOLD = 1e-10
# analysis on S^1 is an FFT, so the circle affords much higher degrees
MAX_DEGREE = {1: 2048, 2: 256}


def max_degree(n: int) -> int:
    """Truncation cap for harmonic analysis on S^n."""
    return MAX_DEGREE.get(int(n), 256)


class SphereField:
    """A real function on S^n given by an evaluator on unit vectors.

    Node samples and harmonic coefficients are memoized per grid resolution
    and per truncation degree; the field itself never changes.

    Parameters
    ----------
    n : int
        Sphere dimension (1 or 2 for anything grid-based).
    func : callable
        Maps an ``(N, n+1)`` array of unit vectors to ``N`` values.
    degree_hint : int
        Rough truncation degree at which the spectrum has decayed.
    label : str
        Free-form description carried into reports.
    """

    def __init__(self, n: int, func, degree_hint: int = 0, label: str = ""):
        self.n = int(n)
        self._func = func
        self.degree_hint = int(min(degree_hint, max_degree(n)))
        self.label = label
        self._samples = {}
        self._coeffs = {}

    def __repr__(self):
        return f"SphereField(n={self.n}, label={self.label!r})"

    def __call__(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self._func(points), dtype=float).reshape(len(points))

    # -- caches ------------------------------------------------------------

    def samples(self, grid: sphere.QuadratureGrid) -> np.ndarray:
        key = (grid.n, grid.resolution)
        if key not in self._samples:
            vals = self(grid.nodes)
            vals.setflags(write=False)
            self._samples[key] = vals
        return self._samples[key]

    def coefficients(self, L: int) -> np.ndarray:
        """Packed harmonic coefficients up to degree ``L``."""
        if L not in self._coeffs:
            c = self._compute_coefficients(L)
            c.setflags(write=False)
            self._coeffs[L] = c
        return self._coeffs[L]

    def _compute_coefficients(self, L):
        grid = sphere.grid_for_degree(self.n, L)
        return sphere.analyze(grid, self.samples(grid), L)

    def spectrum(self, L: int) -> np.ndarray:
        """||P_l u||_2^2 for l = 0..L."""
        return sphere.band_energies(self.n, self.coefficients(L))

    def default_grid(self) -> sphere.QuadratureGrid:
        L = max(sphere.DEFAULT_DEGREE[self.n], self.degree_hint)
        return sphere.grid_for_degree(self.n, L)

    def grid_min(self, grid=None) -> tuple[float, np.ndarray]:
        grid = grid if grid is not None else self.default_grid()
        vals = self.samples(grid)
        i = int(np.argmin(vals))
        return float(vals[i]), grid.nodes[i]

    def is_positive(self, grid=None) -> bool:
        return self.grid_min(grid)[0] > POSITIVITY_THRESHOLD

    def require_positive(self, grid=None, what="field"):
        value, node = self.grid_min(grid)
        if not value > POSITIVITY_THRESHOLD:
            raise PositivityError(
                f"{what} is not positive: value {value:.3e} at node {np.round(node, 6).tolist()}",
                node=node, value=value,
            )

    # -- algebra -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, SphereField):
            return LinearCombination.of([(1.0, self), (1.0, other)])
        if np.isscalar(other):
            return LinearCombination.of([(1.0, self), (float(other), constant(self.n, 1.0))])
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, SphereField):
            return LinearCombination.of([(1.0, self), (-1.0, other)])
        if np.isscalar(other):
            return self + (-float(other))
        return NotImplemented

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, other):
        if np.isscalar(other):
            return LinearCombination.of([(float(other), self)])
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def __truediv__(self, other):
        if np.isscalar(other):
            return self * (1.0 / float(other))
        return NotImplemented

    def power(self, q: float) -> "SphereField":
        """Pointwise power; spectrum is recomputed by quadrature."""
        return SphereField(self.n, lambda x: self(x) ** q, self.degree_hint,
                           label=f"({self.label})^{q:g}")


class LinearCombination(SphereField):
    """Finite linear combination whose coefficients reuse the children's caches."""

    def __init__(self, terms, label=""):
        self.terms = tuple(terms)
        n = self.terms[0][1].n
        if any(f.n != n for _, f in self.terms):
            raise InvalidParameterError("cannot combine fields on different spheres")
        hint = max(f.degree_hint for _, f in self.terms)
        super().__init__(n, self._evaluate, hint, label or self._describe())

    @classmethod
    def of(cls, terms):
        flat = []
        for a, f in terms:
            if isinstance(f, LinearCombination):
                flat.extend((a * b, g) for b, g in f.terms)
            else:
                flat.append((a, f))
        return cls(flat)

    def _describe(self):
        return " + ".join(f"{a:g}*[{f.label}]" for a, f in self.terms)

    def _evaluate(self, points):
        total = np.zeros(len(points))
        for a, f in self.terms:
            total = total + a * f(points)
        return total

    def _compute_coefficients(self, L):
        total = np.zeros(sphere.basis_dimension(self.n, L))
        for a, f in self.terms:
            total = total + a * f.coefficients(L)
        return total


class HarmonicField(SphereField):
    """Finite harmonic expansion; its spectrum is exact, not computed by quadrature."""

    def __init__(self, n: int, coeffs: np.ndarray, label: str = ""):
        coeffs = np.asarray(coeffs, dtype=float)
        self.packed = coeffs
        self.max_degree = sphere._degree_of_length(n, len(coeffs))
        if sphere.basis_dimension(n, self.max_degree) != len(coeffs):
            raise InvalidParameterError(f"{len(coeffs)} is not a valid packed length for n={n}")
        super().__init__(n, lambda x: sphere.synthesize(n, self.packed, x),
                         self.max_degree, label or "harmonic expansion")

    @classmethod
    def from_terms(cls, n: int, terms, offset: float = 0.0, label: str = "") -> "HarmonicField":
        """``terms`` is an iterable of ``(l, m, value)``; ``offset`` adds a constant."""
        terms = [(int(l), int(m), float(v)) for l, m, v in terms]
        L = max([l for l, _, _ in terms], default=0)
        packed = np.zeros(sphere.basis_dimension(n, L))
        for l, m, v in terms:
            packed[sphere.harmonic_index(n, l, m)] += v
        packed[0] += offset * math.sqrt(sphere.total_area(n))
        return cls(n, packed, label)

    def _compute_coefficients(self, L):
        out = np.zeros(sphere.basis_dimension(self.n, L))
        k = min(len(out), len(self.packed))
        out[:k] = self.packed[:k]
        return out

    # scalar algebra and sums of expansions stay exact
    def __mul__(self, other):
        if np.isscalar(other):
            return HarmonicField(self.n, float(other) * self.packed)
        return NotImplemented

    __rmul__ = __mul__

    def __add__(self, other):
        if np.isscalar(other):
            packed = self.packed.copy()
            packed[0] += float(other) * math.sqrt(sphere.total_area(self.n))
            return HarmonicField(self.n, packed)
        if isinstance(other, HarmonicField) and other.n == self.n:
            k = max(len(self.packed), len(other.packed))
            packed = np.zeros(k)
            packed[:len(self.packed)] += self.packed
            packed[:len(other.packed)] += other.packed
            return HarmonicField(self.n, packed)
        return super().__add__(other)

    __radd__ = __add__

    def band(self, lo: int, hi: int | None = None) -> "HarmonicField":
        """Restriction to degrees lo..hi."""
        hi = self.max_degree if hi is None else hi
        labels = sphere.degree_labels(self.n, self.max_degree)
        keep = (labels >= lo) & (labels <= hi)
        return HarmonicField(self.n, np.where(keep, self.packed, 0.0))


def constant(n: int, value: float = 1.0) -> HarmonicField:
    return HarmonicField.from_terms(n, [], offset=value, label=f"constant {value:g}")


def from_callable(n: int, func, degree_hint: int = 0, label: str = "") -> SphereField:
    return SphereField(n, func, degree_hint, label)


def coordinate(n: int, i: int) -> SphereField:
    """The coordinate function omega_i (0-based index)."""
    return SphereField(n, lambda x: x[:, i], 1, label=f"omega_{i + 1}")


# ---------------------------------------------------------------------------
# norms and inequalities

def _grid_for(u, grid):
    return grid if grid is not None else u.default_grid()


def pnorm(u: SphereField, q: float, grid=None) -> float:
    """(int u^q)^(1/q) for any real q != 0; requires u > 0 unless q >= 1."""
    if q == 0:
        raise InvalidParameterError("q = 0 is not a norm exponent")
    grid = _grid_for(u, grid)
    vals = u.samples(grid)
    if q < 1:
        i = int(np.argmin(vals))
        if not vals[i] > 0:
            raise PositivityError(
                f"||u||_{q:g} needs u > 0; u = {vals[i]:.3e} at node {np.round(grid.nodes[i], 6).tolist()}",
                node=grid.nodes[i], value=float(vals[i]),
            )
        integral = sphere.integrate(grid, vals ** q)
    else:
        integral = sphere.integrate(grid, np.abs(vals) ** q)
    return integral ** (1.0 / q)


def reverse_holder_gap(f: SphereField, g: SphereField, q: float, grid=None) -> float:
    """int f g - ||f||_{1/q} ||g||_{-1/(q-1)}; nonnegative for positive f, g and q > 1."""
    if not q > 1:
        raise InvalidParameterError(f"reverse Hoelder needs q > 1, got {q}")
    if grid is None:
        L = max(sphere.DEFAULT_DEGREE[f.n], f.degree_hint, g.degree_hint)
        grid = sphere.grid_for_degree(f.n, L)
    f.require_positive(grid, "f")
    g.require_positive(grid, "g")
    lhs = sphere.integrate(grid, f.samples(grid) * g.samples(grid))
    return lhs - pnorm(f, 1.0 / q, grid) * pnorm(g, -1.0 / (q - 1.0), grid)


def min_on_sphere(u: SphereField, grid=None) -> float:
    """Minimum over grid nodes, refined by Nelder-Mead in tangent coordinates."""
    value, node = u.grid_min(grid)
    frame = sphere._orthonormal_frame(node)

    def at(t):
        p = node + t @ frame
        return float(u(p / np.linalg.norm(p))[0])

    res = minimize(at, np.zeros(u.n), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000,
                            "initial_simplex": np.vstack([np.zeros(u.n), 1e-2 * np.eye(u.n)])})
    return min(value, float(res.fun))


# ---------------------------------------------------------------------------
# JSON schema

def field_from_dict(data: dict, params=None) -> SphereField:
    """Build a field from the JSON schema used by the CLI.

    ``{"type": "harmonic", "n": 2, "coeffs": [[l, m, v], ...], "offset": 1.0}``
    or ``{"type": "bubble_sum", "n": 2, "terms": [{"c": 1.0, "zeta": [...]}, ...]}``.
    The second form needs ``params`` for the bubble exponent.
    """
    if not isinstance(data, dict) or "type" not in data or "n" not in data:
        raise InvalidParameterError("field JSON must be an object with 'type' and 'n'")
    n = data["n"]
    if n not in sphere.SUPPORTED_DIMENSIONS:
        raise InvalidParameterError(f"field dimension must be 1 or 2, got {n!r}")
    if params is not None and params.n != n:
        raise InvalidParameterError(f"field has n={n} but parameters have n={params.n}")
    kind = data["type"]
    if kind == "harmonic":
        coeffs = data.get("coeffs", [])
        try:
            terms = [(int(l), int(m), float(v)) for l, m, v in coeffs]
        except (TypeError, ValueError) as exc:
            raise InvalidParameterError(f"bad harmonic coefficient list: {exc}") from None
        u = HarmonicField.from_terms(n, terms, offset=float(data.get("offset", 0.0)),
                                     label="harmonic (json)")
    elif kind == "bubble_sum":
        if params is None:
            raise InvalidParameterError("bubble_sum fields need (n, s)")
        from .conformal import Bubble, bubble_sum

        terms = data.get("terms")
        if not terms:
            raise InvalidParameterError("bubble_sum needs a non-empty 'terms' list")
        try:
            bubbles = [Bubble(float(t["c"]), np.asarray(t["zeta"], dtype=float), params)
                       for t in terms]
        except (KeyError, TypeError) as exc:
            raise InvalidParameterError(f"bad bubble term: {exc}") from None
        u = bubble_sum(bubbles)
    else:
        raise InvalidParameterError(f"unknown field type {kind!r}")
    u.require_positive(what="input field")
    return u


def load_field(path, params=None) -> SphereField:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"{path}: invalid JSON ({exc})") from None
    return field_from_dict(data, params)
