"""The linearization function ``l(v, x)`` as a jet, covariant Taylor expansion, and symbol derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy as sp

from ..exact import multi_indices
from .connection import K_MAX, ChartConnection, TensorFieldValue, as_field
from .jets import (
    JetSpace,
    TensorJet,
    contract,
    iterated_covariant_derivative,
    jet_einsum,
    stack,
    symmetrize,
)


@dataclass(frozen=True)
class CotangentPoint:
    """Covector ``v`` with components ``v_i`` attached to the chart point ``x0``."""

    x0: tuple
    v: tuple

    def __post_init__(self):
        if len(self.x0) != len(self.v):
            raise ValueError("base point and covector have different dimensions")
        if not all(math.isfinite(float(t)) for t in tuple(self.x0) + tuple(self.v)):
            raise ValueError("cotangent point components must be finite")
        object.__setattr__(self, "x0", tuple(self.x0))
        object.__setattr__(self, "v", tuple(self.v))

    @property
    def n(self) -> int:
        return len(self.x0)

    @property
    def exact(self) -> bool:
        return all(isinstance(t, (int, Fraction)) for t in self.x0 + self.v)

    def scaled(self, c) -> "CotangentPoint":
        return CotangentPoint(self.x0, tuple(c * t for t in self.v))

    def basis(self, p: int) -> "CotangentPoint":
        one = Fraction(1) if self.exact else 1.0
        return CotangentPoint(self.x0, tuple(one if k == p else one * 0 for k in range(self.n)))


@dataclass(frozen=True)
class LJet:
    """Taylor coefficients of ``x -> l(v, x)`` at ``x0`` through order ``order``."""

    point: CotangentPoint
    order: int
    jet: TensorJet

    def coefficient(self, alpha) -> float:
        return self.jet.coefficient(alpha)

    def coefficients(self) -> dict:
        return {m: self.jet.coeffs[k] for k, m in enumerate(self.jet.space.monomials)}

    def __call__(self, x) -> float:
        h = np.asarray(x, dtype=object if self.point.exact else float) - np.asarray(self.point.x0)
        return self.jet.evaluate(h)[()]


def _check_order(K: int, name: str = "jet order") -> None:
    if not 1 <= K <= K_MAX:
        raise ValueError(f"{name} must be between 1 and {K_MAX}, got {K}")


def build_l_jet(point: CotangentPoint, conn: ChartConnection, K: int, space: JetSpace | None = None) -> LJet:
    """Polynomial ``l`` with ``l(x0) = 0``, ``dl(x0) = v`` and vanishing symmetrized ``nabla^k l`` for ``2 <= k <= K``.

    Each order-``k`` coefficient is fixed from the symmetrized ``k``-th covariant
    derivative computed with that order still zero, since the new coefficients
    enter only through the pure partials.
    """
    _check_order(K)
    if point.n != conn.n:
        raise ValueError("cotangent point dimension does not match the connection")
    space = space or JetSpace.get(conn.n, K)
    exact = point.exact
    dtype = object if exact else float
    gamma = conn.gamma_jet(space, point.x0, exact=exact)
    coeffs = np.zeros(space.size, dtype=dtype)
    for i in range(conn.n):
        coeffs[space.unit(i)] = point.v[i]
    for k in range(2, K + 1):
        l = TensorJet(space, coeffs, space.order)
        S = symmetrize(iterated_covariant_derivative(l, gamma, k).value)
        for idx, alpha in enumerate(space.monomials):
            if space.degree[idx] != k:
                continue
            slot = tuple(i for i, e in enumerate(alpha) for _ in range(e))
            fac = math.prod(math.factorial(e) for e in alpha)
            coeffs[idx] = -S[slot] * Fraction(1, fac) if exact else -S[slot] / fac
    return LJet(point, K, TensorJet(space, coeffs, K))


def nabla_l(point: CotangentPoint, conn: ChartConnection, k: int, jet: LJet | None = None) -> TensorFieldValue:
    """Unsymmetrized ``nabla^k l(v)`` at ``x0``."""
    if k < 1:
        raise ValueError("derivative order must be >= 1")
    jet = jet or build_l_jet(point, conn, max(k, 1))
    if k > jet.order:
        raise ValueError(f"l-jet of order {jet.order} cannot give derivative order {k}")
    gamma = conn.gamma_jet(jet.jet.space, point.x0, exact=point.exact)
    out = iterated_covariant_derivative(jet.jet, gamma, k)
    return TensorFieldValue(out.value, "l" * k, point.x0)


def symmetrized_covariant_derivatives(tau: TensorJet, gamma: TensorJet, up_to: int) -> list[np.ndarray]:
    """Symmetrized ``nabla^k`` of a scalar jet at the base point, for ``k = 0..up_to``."""
    out = [tau.value]
    cur = tau
    for _ in range(up_to):
        cur = iterated_covariant_derivative(cur, gamma, 1)
        out.append(symmetrize(cur.value))
    return out


@dataclass(frozen=True)
class CovariantTaylor:
    """``T_N f = sum_n (1/n!) nabla^n f(x0) . lambda^n`` with ``lambda^p = l(e^p, .)``."""

    x0: tuple
    order: int
    derivatives: list
    jet: TensorJet

    def __call__(self, x) -> float:
        h = np.asarray(x, dtype=self.jet.coeffs.dtype) - np.asarray(self.x0, dtype=self.jet.coeffs.dtype)
        return self.jet.evaluate(h)[()]


def covariant_taylor(f, x0: Sequence, conn: ChartConnection, N: int, exact: bool = False) -> CovariantTaylor:
    _check_order(N, "expansion order")
    field = as_field(f, conn)
    space = JetSpace.get(conn.n, N)
    x0 = tuple(x0)
    gamma = conn.gamma_jet(space, x0, exact=exact)
    fjet = field.jet(space, x0, exact=exact)
    derivs = [fjet.value]
    cur = fjet
    for _ in range(N):
        cur = iterated_covariant_derivative(cur, gamma, 1)
        derivs.append(cur.value)

    basis = CotangentPoint(x0, tuple([Fraction(0) if exact else 0.0] * conn.n))
    lam = stack([build_l_jet(basis.basis(p), conn, N, space).jet for p in range(conn.n)])
    total = TensorJet.constant(space, derivs[0])
    power = TensorJet.constant(space, np.ones((), dtype=lam.coeffs.dtype))
    letters = "abcd"
    for n in range(1, N + 1):
        # power carries lambda^{i1} ... lambda^{in} with axes i1..in
        src = letters[: n - 1]
        power = jet_einsum(f"{src},{letters[n - 1]}->{src}{letters[n - 1]}", power, lam)
        term = contract(f"{letters[:n]},{letters[:n]}->", power, derivs[n])
        total = total + (term.scale(Fraction(1, math.factorial(n))) if exact else term.scale(1 / math.factorial(n)))
    return CovariantTaylor(x0, N, derivs, total)


def taylor_jet_mismatch(f, taylor: CovariantTaylor, conn: ChartConnection) -> float:
    """Largest gap between symmetrized covariant derivatives of ``f`` and ``T_N f`` at ``x0`` for orders ``<= N``."""
    space = taylor.jet.space
    exact = taylor.jet.coeffs.dtype == object
    gamma = conn.gamma_jet(space, taylor.x0, exact=exact)
    fjet = as_field(f, conn).jet(space, taylor.x0, exact=exact)
    a = symmetrized_covariant_derivatives(fjet, gamma, taylor.order)
    b = symmetrized_covariant_derivatives(taylor.jet, gamma, taylor.order)
    return max(float(np.max(np.abs(np.asarray(p - q, dtype=float)))) for p, q in zip(a, b))


# -- symbols on the cotangent bundle -----------------------------------------


class FiberSymbol:
    """A function ``sigma(x, w)`` of base point and covector, given symbolically."""

    def __init__(self, expr, coords: Sequence[sp.Symbol], fiber: Sequence[sp.Symbol]):
        self.coords, self.fiber = tuple(coords), tuple(fiber)
        self.expr = sp.sympify(expr)
        self._cache: dict = {}

    @classmethod
    def squared_norm(cls, conn: ChartConnection) -> "FiberSymbol":
        """``g^{ij}(x) w_i w_j``."""
        w = sp.symbols(f"w1:{conn.n + 1}", real=True)
        ginv = sp.simplify(conn.metric.inv())
        expr = sum(ginv[i, j] * w[i] * w[j] for i in range(conn.n) for j in range(conn.n))
        return cls(expr, conn.coords, w)

    @classmethod
    def parse(cls, text: str, conn: ChartConnection) -> "FiberSymbol":
        w = sp.symbols(f"w1:{conn.n + 1}", real=True)
        local = {str(s): s for s in conn.coords + w}
        return cls(sp.sympify(text, locals=local), conn.coords, w)

    @property
    def n(self) -> int:
        return len(self.coords)

    def _derivative(self, xa: tuple, wb: tuple):
        key = (xa, wb)
        if key not in self._cache:
            e = self.expr
            for c, k in zip(self.coords + self.fiber, xa + wb):
                if k:
                    e = sp.diff(e, c, k)
            self._cache[key] = sp.lambdify(self.coords + self.fiber, e, "numpy")
        return self._cache[key]

    def evaluate_derivative(self, xa, wb, x0, v) -> float:
        args = [np.float64(t) for t in tuple(x0) + tuple(v)]
        with np.errstate(all="ignore"):
            val = self._derivative(tuple(xa), tuple(wb))(*args)
        if not np.isfinite(val):
            raise ValueError(f"symbol is not finite at {tuple(x0)}, {tuple(v)}")
        return float(val)


def fiber_derivative(sigma: FiberSymbol, point: CotangentPoint, k: int) -> TensorFieldValue:
    """``D^k sigma(v)``: the ``k``-th derivative along the fiber, as a contravariant tensor."""
    if k < 0:
        raise ValueError("fiber derivative order must be >= 0")
    n = sigma.n
    out = np.zeros((n,) * k)
    for idx in np.ndindex(*out.shape):
        wb = tuple(idx.count(i) for i in range(n))
        out[idx] = sigma.evaluate_derivative((0,) * n, wb, point.x0, point.v)
    return TensorFieldValue(out, "u" * k, point.x0)


def _compose_along(sigma: FiberSymbol, wb0: tuple, point: CotangentPoint, dW: TensorJet, valid: int) -> TensorJet:
    """Jet of ``x -> (d_w^wb0 sigma)(x, W(x))`` given the jet ``dW = W - v``."""
    space = dW.space
    n = sigma.n
    total = TensorJet.zeros(space, valid=valid)
    for beta in multi_indices(n, valid):
        beta = tuple(beta)
        # (W - v)^beta
        powjet = TensorJet.constant(space, 1.0)
        for i, e in enumerate(beta):
            for _ in range(e):
                powjet = jet_einsum(",->", powjet, TensorJet(space, dW.coeffs[:, i], dW.valid))
        wb = tuple(a + b for a, b in zip(wb0, beta))
        coeffs = np.zeros(space.size)
        for k, alpha in enumerate(space.monomials):
            if space.degree[k] > valid - sum(beta):
                break
            coeffs[k] = sigma.evaluate_derivative(alpha, wb, point.x0, point.v) / space.factorial[k]
        inner = TensorJet(space, coeffs, valid)
        bfac = math.prod(math.factorial(e) for e in beta)
        total = total + jet_einsum(",->", inner, powjet).scale(1 / bfac)
    return total.with_valid(valid)


def symbol_covariant_derivative(
    sigma: FiberSymbol, point: CotangentPoint, conn: ChartConnection, k: int, j: int = 0
) -> TensorFieldValue:
    """``nabla^k D^j sigma(v)`` at ``x0``: a tensor with ``j`` upper then ``k`` lower indices.

    The fiber derivatives act on ``v`` inside ``d_x l(v, x)`` before the
    covariant derivatives in ``x`` are taken at ``x0``.
    """
    if k < 0 or j < 0:
        raise ValueError("derivative orders must be >= 0")
    if k + 1 > K_MAX:
        raise ValueError(f"nabla^{k} needs an l-jet of order {k + 1}, above the supported {K_MAX}")
    n = conn.n
    space = JetSpace.get(n, k + 1)
    # L[a, p] = d_a l(e^p, x)
    L = stack([build_l_jet(point.basis(p), conn, k + 1, space).jet.gradient() for p in range(n)])
    W = contract("ap,p->a", L, np.asarray(point.v, dtype=float))
    dW = W - np.asarray(point.v, dtype=float)
    valid = k
    # phi^{P} = (D^j sigma)^{A}(x, W(x)) prod L[a_nu, p_nu]
    comp = {}
    for idx in np.ndindex(*(n,) * j):
        wb = tuple(idx.count(i) for i in range(n))
        if wb not in comp:
            comp[wb] = _compose_along(sigma, wb, point, dW, valid)
    if j:
        Dj = np.zeros((space.size,) + (n,) * j)
        for idx in np.ndindex(*(n,) * j):
            Dj[(slice(None),) + idx] = comp[tuple(idx.count(i) for i in range(n))].coeffs
        phi = TensorJet(space, Dj, valid)
        upper = "abcd"[:j]
        lower = "pqrs"[:j]
        for nu in range(j):
            before = upper[nu:] + lower[:nu]
            after = upper[nu + 1:] + lower[: nu + 1]
            phi = jet_einsum(f"{before},{upper[nu]}{lower[nu]}->{after}", phi, L)
    else:
        phi = comp[(0,) * n]
    gamma = conn.gamma_jet(space, point.x0)
    out = iterated_covariant_derivative(phi, gamma, k, "." * j)
    return TensorFieldValue(out.value, "u" * j + "l" * k, point.x0)
