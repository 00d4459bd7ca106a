"""Numerical cross-checks for singular traces, spectral flow and Toeplitz indices."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConsistencyError,
    DegenerateCrossingError,
    DivergenceError,
    ExpressionError,
    InconclusiveError,
    InsufficientDataError,
    InvalidInputError,
    ModelDomainError,
    PropertyFailure,
    SingtraceError,
)
from .spectral_models import SpectralModel, TailLaw  # noqa: E402

__all__ = [
    "__version__",
    "SpectralModel",
    "TailLaw",
    "SingtraceError",
    "InvalidInputError",
    "ExpressionError",
    "ModelDomainError",
    "DivergenceError",
    "ConsistencyError",
    "PropertyFailure",
    "InconclusiveError",
    "InsufficientDataError",
    "DegenerateCrossingError",
]
