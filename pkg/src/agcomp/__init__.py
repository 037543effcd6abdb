"""Comparison geometry for excess estimates on CD(K, N) spaces.

Submodules: ``kernels`` (model Jacobians, distortion coefficients, the
comparison potential), ``excess`` (excess bounds), ``models`` (exact model
geometries), ``graphs`` (discrete calculus on weighted graphs), ``cd1d``
(one-dimensional entropy convexity) and ``harness`` (batch campaigns).
"""

from .errors import (
    BoundaryEmpty,
    ConfigError,
    ConvergenceError,
    DegenerateBall,
    DimensionMismatch,
    DomainError,
    GridMismatch,
    HypothesisError,
    InvalidConfig,
    InvalidInput,
    InvalidPoint,
    ResourceError,
)
from .excess import AG2Hypotheses, TriangleStats, ag1_bound, ag2_bound, pre_ab_bound, theta0
from .kernels import CurvatureDimension, c_model, phi, phi_d1, phi_d2, s_model, tau, tau_tilde

__version__ = "0.1.0"

__all__ = [
    "AG2Hypotheses",
    "BoundaryEmpty",
    "ConfigError",
    "ConvergenceError",
    "CurvatureDimension",
    "DegenerateBall",
    "DimensionMismatch",
    "DomainError",
    "GridMismatch",
    "HypothesisError",
    "InvalidConfig",
    "InvalidInput",
    "InvalidPoint",
    "ResourceError",
    "TriangleStats",
    "ag1_bound",
    "ag2_bound",
    "c_model",
    "phi",
    "phi_d1",
    "phi_d2",
    "pre_ab_bound",
    "s_model",
    "tau",
    "tau_tilde",
    "theta0",
]
