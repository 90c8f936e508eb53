"""The quadratic form a_2s, its polarization, the deficit and truncation control."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from . import sphere
from .exceptions import TruncationError, InvalidParameterError
from .field import SphereField, pnorm, max_degree
from .specialfn import SpectralParams, alpha_table, sobolev_constant

TAIL_TOL = 1e-8
TAIL_BANDS = 8
# bands below this fraction of the absolute total count as zero in the monotone check
NOISE_FLOOR = 1e-13


@dataclass
class SpectralDiagnostics:
    """Truncation record for one evaluation of a_2s."""

    L: int
    band_energies: np.ndarray
    tail_ratio: float
    monotone: bool
    converged: bool
    positive_part: float
    negative_part: float

    @property
    def scale(self) -> float:
        """Sum of |alpha(l)| ||P_l u||^2; the natural magnitude of u for tolerances."""
        return self.positive_part - self.negative_part

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band_energies"] = [float(x) for x in self.band_energies]
        d["scale"] = self.scale
        return d


@lru_cache(maxsize=64)
def _alphas(params: SpectralParams, L: int) -> np.ndarray:
    table = alpha_table(params, L)
    table.setflags(write=False)
    return table


def _diagnose(energies: np.ndarray, L: int) -> SpectralDiagnostics:
    mag = np.abs(energies)
    total = float(mag.sum())
    pos = float(energies[energies > 0].sum())
    neg = float(energies[energies < 0].sum())
    if total == 0.0:
        return SpectralDiagnostics(L, energies, 0.0, True, True, pos, neg)
    last = mag[-TAIL_BANDS:]
    tail = float(last.max() / total)
    live = np.where(last > NOISE_FLOOR * total, last, 0.0)
    # non-increasing up to rounding, ignoring bands that are pure noise
    monotone = bool(np.all(np.diff(live) <= 1e-12 * total))
    return SpectralDiagnostics(L, energies, tail, monotone, tail < TAIL_TOL and monotone, pos, neg)


def _start_degree(u: SphereField) -> int:
    L = max(sphere.DEFAULT_DEGREE[u.n], u.degree_hint + TAIL_BANDS)
    return int(min(L, max_degree(u.n)))


def band_energies(u: SphereField, params: SpectralParams, L: int) -> np.ndarray:
    """alpha(l) ||P_l u||^2 for l = 0..L."""
    return _alphas(params, L) * u.spectrum(L)


def a2s(u: SphereField, params: SpectralParams, L: int | None = None,
        strict: bool = True) -> tuple[float, SpectralDiagnostics]:
    """Evaluate a_2s[u] = sum alpha(l) ||P_l u||^2 with adaptive truncation.

    Starting from ``L`` (or a default sized from the field), the degree is
    doubled until the tail ratio drops below 1e-8 and the final bands decay,
    up to the degree cap for the sphere (2048 on S^1, 256 on S^2).

    Parameters
    ----------
    strict : bool
        If True a non-converged tail raises :class:`TruncationError`; otherwise
        the last partial sum is returned with ``converged=False``.
    """
    if u.n != params.n:
        raise InvalidParameterError(f"field on S^{u.n} but parameters have n={params.n}")
    L = _start_degree(u) if L is None else int(L)
    cap = max_degree(u.n)
    while True:
        energies = band_energies(u, params, L)
        diag = _diagnose(energies, L)
        if diag.converged or L >= cap:
            break
        L = min(2 * L, cap)
    if strict and not diag.converged:
        raise TruncationError(
            f"a_2s tail did not converge by degree {L}: tail ratio {diag.tail_ratio:.2e}, "
            f"monotone={diag.monotone}", diagnostics=diag)
    return float(np.sum(energies)), diag


def converged_degree(u: SphereField, params: SpectralParams, strict: bool = True) -> int:
    return a2s(u, params, strict=strict)[1].L


def a2s_bilinear(u: SphereField, v: SphereField, params: SpectralParams,
                 L: int | None = None) -> float:
    """Polarization sum alpha(l) <P_l u, P_l v>."""
    if u.n != v.n:
        raise InvalidParameterError("fields live on different spheres")
    if L is None:
        L = max(converged_degree(u, params), converged_degree(v, params))
    prods = sphere.band_products(u.n, u.coefficients(L), v.coefficients(L))
    return float(np.sum(_alphas(params, L) * prods))


def deficit(u: SphereField, params: SpectralParams, return_diagnostics: bool = False):
    """a_2s[u] - S_s ||u||_p^2; nonnegative for positive u, zero exactly on the bubbles."""
    value, diag = a2s(u, params)
    grid = sphere.grid_for_degree(u.n, diag.L)
    u.require_positive(grid)
    norm = pnorm(u, params.p, grid)
    d = value - sobolev_constant(params) * norm ** 2
    if return_diagnostics:
        return d, diag
    return d


def scale(u: SphereField, params: SpectralParams) -> float:
    """Sum of |alpha(l)| ||P_l u||^2."""
    return a2s(u, params)[1].scale
