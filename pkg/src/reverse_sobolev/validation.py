"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

import math
from numbers import Integral, Real

import numpy as np

from . import sphere
from .exceptions import InvalidParameterError
from .field import SphereField
from .specialfn import SpectralParams


def check_params(n, s) -> SpectralParams:
    """Validated (n, s); raises InvalidParameterError outside the admissible windows."""
    if isinstance(n, bool) or not isinstance(n, Integral):
        if not (isinstance(n, Real) and float(n).is_integer()):
            raise InvalidParameterError(f"n must be an integer, got {n!r}")
    if not isinstance(s, Real) or isinstance(s, bool):
        raise InvalidParameterError(f"s must be a real number, got {s!r}")
    return SpectralParams(int(n), float(s))


def check_grid_dimension(n: int) -> int:
    if n not in sphere.SUPPORTED_DIMENSIONS:
        raise InvalidParameterError(f"grids exist only for n in {sphere.SUPPORTED_DIMENSIONS}, got {n}")
    return n


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral) or value < minimum:
        raise InvalidParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_field(u, params: SpectralParams, positive: bool = True) -> SphereField:
    """A SphereField on the right sphere, strictly positive on its grid if requested."""
    if not isinstance(u, SphereField):
        raise InvalidParameterError(f"expected a SphereField, got {type(u).__name__}")
    if u.n != params.n:
        raise InvalidParameterError(f"field lives on S^{u.n} but n = {params.n}")
    check_grid_dimension(u.n)
    if positive:
        u.require_positive(what="input field")
    return u


def check_zeta(zeta, n: int, limit: float = 1.0) -> np.ndarray:
    z = np.asarray(zeta, dtype=float).reshape(-1)
    if z.shape != (n + 1,):
        raise InvalidParameterError(f"zeta must have {n + 1} components, got {z.shape[0]}")
    if not np.all(np.isfinite(z)) or not np.linalg.norm(z) < limit:
        raise InvalidParameterError(f"|zeta| must be < {limit}, got {np.linalg.norm(z):.6g}")
    return z


def check_number_list(values, name: str, lo: float = -math.inf, hi: float = math.inf,
                      open_interval: bool = False) -> list[float]:
    """Non-empty list of finite floats inside (lo, hi) or [lo, hi]."""
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{name} must be a list of numbers") from None
    if not out:
        raise InvalidParameterError(f"{name} must not be empty")
    for v in out:
        inside = lo < v < hi if open_interval else lo <= v <= hi
        if not math.isfinite(v) or not inside:
            raise InvalidParameterError(f"{name} entry {v} outside the allowed range")
    return out


def check_seed(seed) -> int:
    if seed is None:
        return 0
    return check_positive_int(seed, "seed", minimum=0)
