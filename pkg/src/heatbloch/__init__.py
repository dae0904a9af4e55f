"""Certified schlicht disks for heat Bochner-Takahashi maps."""

__version__ = "0.1.0"

from .caloric import (  # noqa: E402
    CaloricComponent,
    HeatMap,
    KernelTerm,
    LinearMap,
    MultiIndex,
    PolyTerm,
    SpaceTimePoint,
    cubic_test_map,
    derivative,
    evaluate,
    heat_kernel,
    heat_polynomial_1d,
    identity_like_map,
    jacobian,
    normalize,
)
from .linalg import SpectralSummary, invert, spectral_summary  # noqa: E402

__all__ = [
    "CaloricComponent",
    "HeatMap",
    "KernelTerm",
    "LinearMap",
    "MultiIndex",
    "PolyTerm",
    "SpaceTimePoint",
    "SpectralSummary",
    "cubic_test_map",
    "derivative",
    "evaluate",
    "heat_kernel",
    "heat_polynomial_1d",
    "identity_like_map",
    "invert",
    "jacobian",
    "normalize",
    "spectral_summary",
]
