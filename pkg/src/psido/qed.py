"""Euclidean gauge-field symbol, its inverse, and the Feynman-gauge propagator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import GaussianRational
from .parametrix import laplacian_kernel_constant
from .symbols import DiffOperator, PolySymbol, op_to_symbol

DIM = 4
METRIC = np.eye(DIM)


def _momentum(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if k.shape != (DIM,) or not np.all(np.isfinite(k)):
        raise ValueError("momentum must be four finite real components")
    return k


@dataclass(frozen=True)
class GaugeSymbol:
    """``sigma_{mu nu}(k) = k^2 g_{mu nu} + (1/alpha - 1) k_mu k_nu``."""

    k: np.ndarray
    alpha: float
    matrix: np.ndarray


@dataclass(frozen=True)
class PropagatorCoefficients:
    """``Sigma^{mu nu} = A g^{mu nu} + B k^mu k^nu``."""

    k: np.ndarray
    alpha: float
    A: float
    B: float

    def matrix(self) -> np.ndarray:
        return self.A * METRIC + self.B * np.outer(self.k, self.k)


def gauge_symbol(k, alpha: float) -> GaugeSymbol:
    if alpha == 0:
        raise ValueError("gauge parameter alpha must be nonzero")
    k = _momentum(k)
    k2 = float(k @ k)
    mat = k2 * METRIC + ((1 - alpha) / alpha) * np.outer(k, k)
    return GaugeSymbol(k, float(alpha), mat)


def invert_gauge_symbol(sigma: GaugeSymbol) -> PropagatorCoefficients:
    k2 = float(sigma.k @ sigma.k)
    if k2 == 0:
        raise ValueError("gauge symbol is singular at k = 0")
    return PropagatorCoefficients(sigma.k, sigma.alpha, 1 / k2, (sigma.alpha - 1) / k2**2)


def identity_residual(sigma: GaugeSymbol, inverse: PropagatorCoefficients) -> float:
    """Max-norm of ``sigma Sigma - identity``."""
    return float(np.max(np.abs(sigma.matrix @ inverse.matrix() - np.eye(DIM))))


def gauge_operator(alpha) -> list[list[DiffOperator]]:
    """``P_{mu nu} = -g_{mu nu} Box + (1 - 1/alpha) d_mu d_nu`` with exact rational ``alpha``."""
    alpha = Fraction(alpha)
    if alpha == 0:
        raise ValueError("gauge parameter alpha must be nonzero")
    box = DiffOperator.laplacian(DIM)
    c = GaussianRational(1 - 1 / alpha)
    d = [DiffOperator.partial(DIM, [int(i == mu) for i in range(DIM)]) for mu in range(DIM)]
    rows = []
    for mu in range(DIM):
        row = []
        for nu in range(DIM):
            op = (d[mu] @ d[nu]) * c
            if mu == nu:
                op = op + box * -1
            row.append(op)
        rows.append(row)
    return rows


def gauge_operator_symbol(alpha) -> list[list[PolySymbol]]:
    return [[op_to_symbol(op) for op in row] for row in gauge_operator(alpha)]


def euclidean_propagator(x_minus_y, alpha: float = 1.0) -> np.ndarray:
    """Position-space propagator ``g^{mu nu} / (4 pi^2 |x - y|^2)``, available at ``alpha = 1``."""
    if alpha != 1:
        raise ValueError("the position-space propagator is only available in Feynman gauge (alpha = 1)")
    d = _momentum(x_minus_y)
    r2 = float(d @ d)
    if r2 == 0:
        raise ValueError("propagator is singular at coincident points")
    # the n = 4 fundamental solution of the Laplacian is C/|x|^2 with C < 0
    return -laplacian_kernel_constant(DIM) / r2 * METRIC


@dataclass(frozen=True)
class SweepRow:
    k: tuple
    alpha: float
    A: float
    B: float
    max_identity_residual: float

    def as_list(self) -> list:
        return [*self.k, self.alpha, self.A, self.B, self.max_identity_residual]


SWEEP_COLUMNS = ["k0", "k1", "k2", "k3", "alpha", "A", "B", "max_identity_residual"]


def random_momentum(rng: np.random.Generator, kmin: float, kmax: float) -> np.ndarray:
    """Uniform direction with log-uniform magnitude in ``[kmin, kmax]``."""
    direction = rng.normal(size=DIM)
    direction /= np.linalg.norm(direction)
    return direction * math.exp(rng.uniform(math.log(kmin), math.log(kmax)))


def sweep(alphas, kmax: float, samples: int, rng: np.random.Generator, kmin: float = 1e-3) -> list[SweepRow]:
    """Invert the gauge symbol at ``samples`` random momenta for each gauge parameter."""
    if kmax <= kmin:
        raise ValueError(f"kmax ({kmax}) must exceed kmin ({kmin})")
    rows = []
    for alpha in alphas:
        for _ in range(samples):
            k = random_momentum(rng, kmin, kmax)
            sig = gauge_symbol(k, alpha)
            inv = invert_gauge_symbol(sig)
            rows.append(SweepRow(tuple(map(float, k)), float(alpha), inv.A, inv.B, identity_residual(sig, inv)))
    return rows
