"""Numerical companion for the reverse fractional Sobolev inequality on spheres.

Exact spectral constants, conformal bubbles, the quadratic form a_2s, bubble
decompositions with the distance d(u), and the stability quotient
E(u) = deficit(u) / d(u).
"""

__version__ = "0.1.0"

from .exceptions import (ConvergenceError, InvalidParameterError, InvariantError,  # noqa: E402
                         OnManifoldError, PositivityError, ReverseSobolevError, TruncationError)
from .specialfn import SpectralParams, alpha, sobolev_constant, local_constant  # noqa: E402
from .field import HarmonicField, SphereField  # noqa: E402
from .conformal import Bubble, ConformalMap  # noqa: E402
from .quadform import a2s, deficit  # noqa: E402
from .decompose import distance  # noqa: E402
from .stability import quotient  # noqa: E402
from .estimators import BubbleDecomposition, StabilityQuotient  # noqa: E402

__all__ = [
    "__version__", "SpectralParams", "alpha", "sobolev_constant", "local_constant",
    "SphereField", "HarmonicField", "Bubble", "ConformalMap", "a2s", "deficit", "distance",
    "quotient", "BubbleDecomposition", "StabilityQuotient", "ReverseSobolevError",
    "InvalidParameterError", "PositivityError", "OnManifoldError", "TruncationError",
    "ConvergenceError", "InvariantError",
]
