"""Eigenangle statistics of Ewens random permutation matrices.

Samplers for Ewens(theta) virtual permutations, GEM(theta) sticks and the
scale-invariant Poisson process; counting functions of the limiting
eigenangle processes; exact quadrature of the asymptotic constants; and a
reproducible Monte-Carlo harness with statistical verdicts.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigInvalid,
    DegenerateSeries,
    DivergentAtZero,
    EwensSpectraError,
    InsufficientGrid,
    InvalidWindow,
    NotCoprime,
    TruncationOverflow,
)

__all__ = [
    "__version__",
    "ConfigInvalid",
    "DegenerateSeries",
    "DivergentAtZero",
    "EwensSpectraError",
    "InsufficientGrid",
    "InvalidWindow",
    "NotCoprime",
    "TruncationOverflow",
]
