"""Analytic bifurcation analysis for polynomial maps G: R^n -> R^m."""

from .kernels import BACKEND
from .tensor_jet import (
    DerivativeTensorSet,
    Jet,
    ProblemSpec,
    derive_tensors,
    enumerate_partitions,
    jet_residuals,
    taylor_coefficient,
)

__all__ = [
    "BACKEND",
    "DerivativeTensorSet",
    "Jet",
    "ProblemSpec",
    "derive_tensors",
    "enumerate_partitions",
    "jet_residuals",
    "taylor_coefficient",
]
