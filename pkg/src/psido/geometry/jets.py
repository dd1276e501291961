"""Truncated Taylor jets of tensor-valued functions at a point.

A jet stores the coefficients ``c_a`` of ``sum_a c_a h**a`` where ``h = x - x0``
and ``a`` runs over multi-indices up to the order of its :class:`JetSpace`.
``valid`` records the order through which the coefficients are trustworthy;
products and derivatives propagate it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ..exact import multi_indices


class JetSpace:
    """Graded monomial basis in ``n`` variables up to total degree ``order``."""

    def __init__(self, n: int, order: int):
        if n < 1 or order < 0:
            raise ValueError("jet space needs n >= 1 and order >= 0")
        self.n, self.order = n, order
        self.monomials = [tuple(m) for m in multi_indices(n, order)]
        self.index = {m: k for k, m in enumerate(self.monomials)}
        self.size = len(self.monomials)
        self.degree = np.array([sum(m) for m in self.monomials])
        self.factorial = np.array([math.prod(math.factorial(e) for e in m) for m in self.monomials])

        ia, ib, ic = [], [], []
        for a, ma in enumerate(self.monomials):
            for b, mb in enumerate(self.monomials):
                mc = tuple(p + q for p, q in zip(ma, mb))
                if sum(mc) <= order:
                    ia.append(a)
                    ib.append(b)
                    ic.append(self.index[mc])
        self._ia, self._ib, self._ic = map(np.array, (ia, ib, ic))
        self._deg_c = self.degree[self._ic]

        # d/dh_i maps coefficient of a + e_i, scaled by a_i + 1, onto a
        self._deriv = []
        for i in range(n):
            src, dst, fac = [], [], []
            for k, m in enumerate(self.monomials):
                up = m[:i] + (m[i] + 1,) + m[i + 1:]
                if up in self.index:
                    src.append(self.index[up])
                    dst.append(k)
                    fac.append(m[i] + 1)
            self._deriv.append((np.array(src, dtype=int), np.array(dst, dtype=int), np.array(fac)))

    @staticmethod
    @lru_cache(maxsize=None)
    def get(n: int, order: int) -> "JetSpace":
        return JetSpace(n, order)

    def product_triplets(self, valid: int):
        keep = self._deg_c <= valid
        return self._ia[keep], self._ib[keep], self._ic[keep]

    def unit(self, i: int) -> int:
        return self.index[tuple(int(k == i) for k in range(self.n))]

    def __repr__(self) -> str:
        return f"JetSpace(n={self.n}, order={self.order})"


def _zeros(shape, dtype):
    if dtype == object:
        return np.zeros(shape, dtype=object)
    return np.zeros(shape, dtype=dtype)


@dataclass(frozen=True)
class TensorJet:
    space: JetSpace
    coeffs: np.ndarray
    valid: int

    def __post_init__(self):
        if self.coeffs.shape[0] != self.space.size:
            raise ValueError("coefficient array does not match the jet space")
        valid = min(self.valid, self.space.order)
        object.__setattr__(self, "valid", valid)
        high = self.space.degree > valid
        if high.any() and np.any(self.coeffs[high] != 0):
            c = self.coeffs.copy()
            c[high] = 0
            object.__setattr__(self, "coeffs", c)

    # -- constructors -----------------------------------------------------

    @classmethod
    def zeros(cls, space, shape=(), valid=None, dtype=float):
        valid = space.order if valid is None else valid
        return cls(space, _zeros((space.size,) + tuple(shape), dtype), valid)

    @classmethod
    def constant(cls, space, value, valid=None):
        value = np.asarray(value)
        c = _zeros((space.size,) + value.shape, value.dtype)
        c[0] = value
        return cls(space, c, space.order if valid is None else valid)

    @classmethod
    def coordinate(cls, space, i, dtype=float):
        """The jet of ``h_i = x_i - x0_i`` (exact polynomial)."""
        c = _zeros((space.size,), dtype)
        c[space.unit(i)] = 1
        return cls(space, c, space.order)

    # -- structure --------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape[1:]

    @property
    def rank(self) -> int:
        return len(self.shape)

    @property
    def value(self) -> np.ndarray:
        """Tensor value at the base point."""
        return self.coeffs[0]

    def coefficient(self, alpha) -> np.ndarray:
        return self.coeffs[self.space.index[tuple(alpha)]]

    def with_valid(self, valid: int) -> "TensorJet":
        return TensorJet(self.space, self.coeffs, min(valid, self.valid))

    def astype(self, dtype) -> "TensorJet":
        return TensorJet(self.space, self.coeffs.astype(dtype), self.valid)

    # -- arithmetic -------------------------------------------------------

    def _combine(self, other, sign):
        if isinstance(other, TensorJet):
            return TensorJet(self.space, self.coeffs + sign * other.coeffs, min(self.valid, other.valid))
        c = self.coeffs.copy()
        c[0] = c[0] + sign * np.asarray(other)
        return TensorJet(self.space, c, self.valid)

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self)._combine(other, 1)

    def __neg__(self):
        return TensorJet(self.space, -self.coeffs, self.valid)

    def scale(self, factor) -> "TensorJet":
        return TensorJet(self.space, self.coeffs * factor, self.valid)

    def __mul__(self, other):
        if isinstance(other, TensorJet):
            if self.rank or other.rank:
                raise TypeError("use jet_einsum for tensor-valued products")
            return jet_einsum(",->", self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def power(self, k: int) -> "TensorJet":
        out = TensorJet.constant(self.space, np.ones(self.shape, dtype=self.coeffs.dtype))
        for _ in range(k):
            out = out * self
        return out

    # -- calculus ---------------------------------------------------------

    def partial(self, i: int) -> "TensorJet":
        src, dst, fac = self.space._deriv[i]
        c = _zeros(self.coeffs.shape, self.coeffs.dtype)
        fac = fac.reshape((-1,) + (1,) * self.rank)
        c[dst] = self.coeffs[src] * fac
        return TensorJet(self.space, c, self.valid - 1)

    def gradient(self) -> "TensorJet":
        """Partial derivatives with the derivative index appended last."""
        parts = [self.partial(i).coeffs for i in range(self.space.n)]
        return TensorJet(self.space, np.stack(parts, axis=-1), self.valid - 1)

    def evaluate(self, h) -> np.ndarray:
        h = np.asarray(h)
        out = 0
        for k, m in enumerate(self.space.monomials):
            if self.space.degree[k] > self.valid:
                break
            out = out + self.coeffs[k] * math.prod(h[i] ** e for i, e in enumerate(m))
        return np.asarray(out)


def jet_einsum(subscripts: str, a: TensorJet, b: TensorJet) -> TensorJet:
    """Truncated product of two jets contracting tensor indices like :func:`numpy.einsum`.

    Subscripts refer to tensor axes only and must be lowercase letters.
    """
    if a.space is not b.space:
        raise ValueError("jets live in different jet spaces")
    lhs, out = subscripts.split("->")
    sa, sb = lhs.split(",")
    valid = min(a.valid, b.valid)
    ia, ib, ic = a.space.product_triplets(valid)
    prod = np.einsum(f"Z{sa},Z{sb}->Z{out}", a.coeffs[ia], b.coeffs[ib])
    res = _zeros((a.space.size,) + prod.shape[1:], prod.dtype)
    np.add.at(res, ic, prod)
    return TensorJet(a.space, res, valid)


def contract(subscripts: str, a: TensorJet, array) -> TensorJet:
    """Contract the tensor part of a jet with a constant array."""
    lhs, out = subscripts.split("->")
    sa, sb = lhs.split(",")
    c = np.einsum(f"Z{sa},{sb}->Z{out}", a.coeffs, np.asarray(array))
    return TensorJet(a.space, c, a.valid)


def stack(jets, axis: int = -1) -> TensorJet:
    """Stack same-shaped jets along a new tensor axis."""
    jets = list(jets)
    ax = axis if axis < 0 else axis + 1
    return TensorJet(jets[0].space, np.stack([j.coeffs for j in jets], axis=ax), min(j.valid for j in jets))


def symmetrize(array: np.ndarray, axes=None) -> np.ndarray:
    """Average over all permutations of the given axes (default: all)."""
    array = np.asarray(array)
    axes = list(range(array.ndim)) if axes is None else list(axes)
    if len(axes) < 2:
        return array.copy()
    total = None
    count = 0
    for perm in itertools.permutations(axes):
        order = list(range(array.ndim))
        for src, dst in zip(axes, perm):
            order[src] = dst
        term = np.transpose(array, order)
        total = term if total is None else total + term
        count += 1
    return total / count if array.dtype != object else total * Fraction(1, count)


def covariant_derivative_jet(tau: TensorJet, gamma: TensorJet, variance: str | None = None) -> TensorJet:
    """Jet of the covariant derivative of a tensor jet.

    ``gamma`` has shape ``(n, n, n)`` with ``gamma[j, i, k]`` the coefficient
    of ``-tau_j`` in ``tau_{k;i}``.  ``variance`` has one character per tensor
    axis: ``"l"`` for a lower index, ``"u"`` for an upper index, ``"."`` for an
    inert axis.  The new derivative index is appended last.
    """
    m = tau.rank
    variance = "l" * m if variance is None else variance
    if len(variance) != m:
        raise ValueError("variance string does not match the tensor rank")
    letters = "abcdefgh"[:m]
    out = tau.gradient()
    for nu, kind in enumerate(variance):
        if kind == ".":
            continue
        renamed = letters[:nu] + "j" + letters[nu + 1:]
        if kind == "l":
            out = out - jet_einsum(f"ji{letters[nu]},{renamed}->{letters}i", gamma, tau)
        elif kind == "u":
            out = out + jet_einsum(f"{letters[nu]}ij,{renamed}->{letters}i", gamma, tau)
        else:
            raise ValueError(f"unknown index kind {kind!r}")
    return out.with_valid(min(tau.valid - 1, gamma.valid))


def iterated_covariant_derivative(tau: TensorJet, gamma: TensorJet, k: int, variance: str | None = None) -> TensorJet:
    variance = "l" * tau.rank if variance is None else variance
    for _ in range(k):
        tau = covariant_derivative_jet(tau, gamma, variance)
        variance += "l"
    return tau
