"""Closed-form constants: Gamma, operator eigenvalues, sharp constants.

Everything here is a pure function of the dimension ``n`` and the order ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParameterError

# sigma = s - n/2 closer than this to {0, 1, 2} is rejected
SIGMA_GUARD = 1e-9

# direct Gamma ratios are used below this argument, log-space above
_DIRECT_LIMIT = 140.0


class GammaPoleError(ValueError):
    """Gamma was evaluated at a non-positive integer."""


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def gamma(x: float) -> float:
    """Gamma function for real arguments.

    Negative non-integer arguments go through reflection inside ``math.gamma``;
    poles raise :class:`GammaPoleError`.
    """
    x = float(x)
    if _is_nonpositive_integer(x):
        raise GammaPoleError(f"Gamma has a pole at x = {x:g}")
    return math.gamma(x)


def log_gamma(x: float) -> tuple[float, int]:
    """Return ``(log|Gamma(x)|, sign(Gamma(x)))``."""
    x = float(x)
    if _is_nonpositive_integer(x):
        raise GammaPoleError(f"Gamma has a pole at x = {x:g}")
    if x > 0:
        return math.lgamma(x), 1
    sign = -1 if math.floor(-x) % 2 == 0 else 1
    return math.lgamma(x), sign


@dataclass(frozen=True)
class SpectralParams:
    """Dimension ``n`` and order ``s`` with ``s - n/2`` in (0,1) or (1,2).

    The critical exponent ``p = 2n/(n-2s)`` is negative throughout.
    """

    n: int
    s: float
    p: float = field(init=False)
    sigma: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise InvalidParameterError(f"n must be an integer >= 1, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        s = float(self.s)
        if not math.isfinite(s):
            raise InvalidParameterError(f"s must be finite, got {self.s!r}")
        object.__setattr__(self, "s", s)
        sigma = s - self.n / 2
        if not (0 < sigma < 2) or min(abs(sigma - k) for k in (0, 1, 2)) < SIGMA_GUARD:
            raise InvalidParameterError(
                f"s - n/2 = {sigma:g} is outside (0,1) U (1,2) for n={self.n}, s={s:g}"
            )
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "p", 2 * self.n / (self.n - 2 * s))

    @property
    def window(self) -> int:
        """0 for sigma in (0,1), 1 for sigma in (1,2)."""
        return 0 if self.sigma < 1 else 1

    @property
    def bubble_exponent(self) -> float:
        """Exponent (2s-n)/2 carried by the factor (1 - zeta.omega) in a bubble."""
        return self.s - self.n / 2

    def to_dict(self) -> dict:
        return {"n": self.n, "s": self.s, "p": self.p, "sigma": self.sigma}


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^n in R^(n+1)."""
    if n < 0:
        raise InvalidParameterError(f"sphere dimension must be >= 0, got {n}")
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def alpha_log(params: SpectralParams, ell: int) -> tuple[float, int]:
    """Eigenvalue of degree ``ell`` as ``(log|alpha|, sign)``; sign 0 means alpha = 0."""
    a = ell + params.n / 2 + params.s
    b = ell + params.n / 2 - params.s
    if _is_nonpositive_integer(b):
        return -math.inf, 0
    la, sa = log_gamma(a)
    lb, sb = log_gamma(b)
    return la - lb, sa * sb


def alpha(params: SpectralParams, ell: int) -> float:
    """Eigenvalue Gamma(l + n/2 + s) / Gamma(l + n/2 - s) of A_2s on degree ``ell``.

    Returns exactly 0 when ``l + n/2 - s`` is a non-positive integer.
    """
    if ell < 0:
        raise InvalidParameterError(f"degree must be >= 0, got {ell}")
    b = ell + params.n / 2 - params.s
    if _is_nonpositive_integer(b):
        return 0.0
    a = ell + params.n / 2 + params.s
    if a < _DIRECT_LIMIT:
        return math.gamma(a) / math.gamma(b)
    la, sign = alpha_log(params, ell)
    return sign * math.exp(la)


def alpha_table(params: SpectralParams, L: int) -> np.ndarray:
    """Eigenvalues for degrees 0..L as an array."""
    return np.array([alpha(params, ell) for ell in range(L + 1)])


def sobolev_constant(params: SpectralParams) -> float:
    """Sharp constant of the reverse Sobolev inequality (printed Gamma formula)."""
    n, s = params.n, params.s
    return (
        (4 * math.pi) ** s
        * gamma((n + 2 * s) / 2)
        / gamma((n - 2 * s) / 2)
        * (math.gamma(n / 2) / math.gamma(n)) ** (2 * s / n)
    )


def sobolev_constant_identity(params: SpectralParams) -> float:
    """Same constant from a_2s[1] = S_s ||1||_p^2, i.e. alpha(0) |S^n|^(2s/n)."""
    return alpha(params, 0) * sphere_area(params.n) ** (2 * params.s / params.n)


def sobolev_constant_normalized(params: SpectralParams) -> float:
    """Sharp constant for the probability measure on S^n; equals alpha(0)."""
    area = sphere_area(params.n)
    return sobolev_constant(params) * area ** (2 / params.p - 1)


def local_constant(params: SpectralParams) -> float:
    """4s / (n + 2s + 2)."""
    return 4 * params.s / (params.n + 2 * params.s + 2)


def local_constant_from_alpha(params: SpectralParams) -> float:
    return 1 - alpha(params, 1) / alpha(params, 2)


def alpha_asymptotic_deviation(params: SpectralParams, k_max: int) -> list[tuple[int, float]]:
    """``(k, |alpha(k) k^(-2s) - 1| * k)`` for k = 10..k_max, computed in log space."""
    if k_max < 10:
        raise InvalidParameterError(f"k_max must be >= 10, got {k_max}")
    out = []
    for k in range(10, k_max + 1):
        la, sign = alpha_log(params, k)
        if sign <= 0:
            raise ArithmeticError(f"alpha({k}) is not positive")
        dev = abs(math.expm1(la - 2 * params.s * math.log(k)))
        out.append((k, dev * k))
    return out


def alpha_asymptotic_limit(params: SpectralParams) -> float:
    """Limit of k * (alpha(k) k^(-2s) - 1), which is s(n-1)."""
    # log Gamma(k+a)/Gamma(k+b) = (a-b) log k + (a-b)(a+b-1)/(2k) + O(k^-2)
    a = params.n / 2 + params.s
    b = params.n / 2 - params.s
    return (a - b) * (a + b - 1) / 2


def balance_constant(params: SpectralParams) -> float:
    """Integral of (1-|x|^2)/(1+|x|^2) * (2/(1+|x|^2))^((n+2s)/2) over R^n, closed form."""
    n, s = params.n, params.s
    return (
        2 ** ((n + 2 * s - 2) / 2)
        * sphere_area(n - 1)
        * math.gamma(n / 2)
        * math.gamma(s)
        / math.gamma((n + 2 * s + 2) / 2)
        * (s - n / 2)
    )


def balance_constant_printed(params: SpectralParams) -> float:
    """The variant with exponent (n-2s-2)/2 on the power of two.

    Differs from :func:`balance_constant` by the factor 2^(2s); kept for the
    negative check that documents the discrepancy.
    """
    return balance_constant(params) * 2.0 ** (-2 * params.s)


def balance_normalizer(params: SpectralParams) -> float:
    """Limit of delta^((n-2s)/2) F(delta, xi) / u(xi) along xi.

    The balance constant times the value 2^((n-2s)/2) of the stereographic
    weight at the origin.
    """
    return balance_constant(params) * 2.0 ** ((params.n - 2 * params.s) / 2)


def bubble_profile_integral(params: SpectralParams) -> float:
    """Integral of B^(p-1) = (2/(1+|x|^2))^((n+2s)/2) over R^n."""
    n, s = params.n, params.s
    b = (n + 2 * s) / 2
    return 2 ** b * math.pi ** (n / 2) * math.gamma(b - n / 2) / math.gamma(b)


def concentration_constant(params: SpectralParams) -> float:
    """Limit of int u v_zeta^(p-1) / (u(nu) (1-|zeta|)^(n/(2p))) as zeta -> nu.

    Equals 2^(n/(2p)) times the integral of B^(p-1).
    """
    return 2.0 ** (params.n / (2 * params.p)) * bubble_profile_integral(params)


def concentration_constant_printed(params: SpectralParams) -> float:
    """The variant with 2^(-n/(2p)); off from the true limit by the factor 2^(-n/p)."""
    return 2.0 ** (-params.n / (2 * params.p)) * bubble_profile_integral(params)


def constants_report(params: SpectralParams, L: int = 10) -> dict:
    """All scalar constants for one parameter pair, as plain JSON-ready values."""
    area = sphere_area(params.n)
    S_formula = sobolev_constant(params)
    return {
        "params": params.to_dict(),
        "alpha": [alpha(params, ell) for ell in range(L + 1)],
        "sobolev_constant": S_formula,
        "sobolev_constant_identity": sobolev_constant_identity(params),
        "sobolev_constant_normalized": sobolev_constant_normalized(params),
        "local_constant": local_constant(params),
        "local_constant_from_alpha": local_constant_from_alpha(params),
        "sphere_area": area,
        "sphere_area_lower": sphere_area(params.n - 1),
        "a2s_of_one": alpha(params, 0) * area,
        "a2s_of_one_normalized": alpha(params, 0),
        "balance_constant": balance_constant(params),
        "concentration_constant": concentration_constant(params),
    }
