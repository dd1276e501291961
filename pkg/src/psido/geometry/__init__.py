"""Tensor calculus on one coordinate chart with a possibly torsionful connection."""

from .connection import (
    K_MAX,
    ChartConnection,
    CurvatureValue,
    TensorField,
    TensorFieldValue,
    covariant_derivative,
    curvature_torsion,
    iterated_scalar_derivative,
    ricci_identity_check,
    scalar_curvature,
)
from .jets import JetSpace, TensorJet, jet_einsum, symmetrize
from .linearization import (
    CotangentPoint,
    CovariantTaylor,
    FiberSymbol,
    LJet,
    build_l_jet,
    covariant_taylor,
    fiber_derivative,
    nabla_l,
    symbol_covariant_derivative,
    taylor_jet_mismatch,
)

__all__ = [
    "K_MAX",
    "ChartConnection",
    "CotangentPoint",
    "CovariantTaylor",
    "CurvatureValue",
    "FiberSymbol",
    "JetSpace",
    "LJet",
    "TensorField",
    "TensorFieldValue",
    "TensorJet",
    "build_l_jet",
    "covariant_derivative",
    "covariant_taylor",
    "curvature_torsion",
    "fiber_derivative",
    "iterated_scalar_derivative",
    "jet_einsum",
    "nabla_l",
    "ricci_identity_check",
    "scalar_curvature",
    "symbol_covariant_derivative",
    "symmetrize",
    "taylor_jet_mismatch",
]
