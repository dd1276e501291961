"""Connections on a single coordinate chart, tensor fields, torsion and curvature."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from ..exact import multi_indices
from .jets import JetSpace, TensorJet, covariant_derivative_jet, iterated_covariant_derivative

K_MAX = 4
FD_STEP = 1e-3


# -- symbolic tensors with cached partial derivatives ------------------------


class ExpressionTensor:
    """Tensor of sympy expressions whose partial derivatives are lambdified up front."""

    def __init__(self, exprs, coords: Sequence[sp.Symbol], order: int):
        arr = np.array(exprs, dtype=object)
        self.shape = arr.shape
        self.coords = tuple(coords)
        self.order = order
        flat = [sp.sympify(e) for e in arr.ravel()]
        n = len(self.coords)
        self.exprs = {(0,) * n: flat}
        for alpha in multi_indices(n, order, 1):
            alpha = tuple(alpha)
            i = next(k for k, e in enumerate(alpha) if e)
            parent = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
            self.exprs[alpha] = [sp.diff(e, self.coords[i]) for e in self.exprs[parent]]
        self._funcs = {a: sp.lambdify(self.coords, list(es), "numpy") for a, es in self.exprs.items()}

    def __call__(self, x) -> np.ndarray:
        return self.derivative((0,) * len(self.coords), x)

    def derivative(self, alpha, x) -> np.ndarray:
        vals = self._funcs[tuple(alpha)](*[float(t) for t in x])
        return np.array([complex(v) if np.iscomplexobj(v) else float(v) for v in vals]).reshape(self.shape)

    def exact_derivative(self, alpha, x) -> np.ndarray:
        subs = {c: sp.Rational(Fraction(t).numerator, Fraction(t).denominator) for c, t in zip(self.coords, x)}
        out = []
        for e in self.exprs[tuple(alpha)]:
            val = sp.simplify(e.subs(subs)) if e.free_symbols else e
            if not val.is_Rational:
                raise ValueError(f"value {val} at {tuple(x)} is not rational; exact jets need rational data")
            out.append(Fraction(int(val.p), int(val.q)))
        return np.array(out, dtype=object).reshape(self.shape)

    def jet(self, space: JetSpace, x, valid: int | None = None, exact: bool = False) -> TensorJet:
        valid = min(self.order, space.order) if valid is None else min(valid, self.order, space.order)
        dtype = object if exact else float
        coeffs = np.zeros((space.size,) + self.shape, dtype=dtype)
        for k, alpha in enumerate(space.monomials):
            if sum(alpha) > valid:
                break
            d = self.exact_derivative(alpha, x) if exact else self.derivative(alpha, x)
            coeffs[k] = d * Fraction(1, int(space.factorial[k])) if exact else d / space.factorial[k]
        return TensorJet(space, coeffs, valid)


def _fd_weights(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference weights for the ``d``-th derivative, at least fourth-order accurate."""
    p = (d + 1) // 2 + 1
    offsets = np.arange(-p, p + 1)
    A = np.vander(offsets, increasing=True).T.astype(float)
    rhs = np.zeros(len(offsets))
    rhs[d] = math.factorial(d)
    return offsets, np.linalg.solve(A, rhs)


class SampledTensor:
    """Tensor field given by a numeric callable; derivatives by central differences."""

    def __init__(self, func: Callable, shape: tuple, n: int, order: int, step: float = FD_STEP):
        if not step > 1e-8:
            raise ValueError(f"finite-difference step {step} underflows")
        self.func, self.shape, self.n, self.order, self.step = func, tuple(shape), n, order, step

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float).reshape(self.shape)

    def derivative(self, alpha, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        stencils = [_fd_weights(a) if a else (np.array([0]), np.array([1.0])) for a in alpha]
        out = np.zeros(self.shape)
        for combo in np.ndindex(*[len(s[0]) for s in stencils]):
            w = math.prod(stencils[i][1][c] for i, c in enumerate(combo))
            if w == 0:
                continue
            shift = np.array([stencils[i][0][c] for i, c in enumerate(combo)], dtype=float) * self.step
            out += w * self(x + shift)
        return out / self.step ** sum(alpha)

    def jet(self, space: JetSpace, x, valid: int | None = None, exact: bool = False) -> TensorJet:
        if exact:
            raise ValueError("sampled fields do not support exact jets")
        valid = min(self.order, space.order) if valid is None else min(valid, self.order, space.order)
        coeffs = np.zeros((space.size,) + self.shape)
        for k, alpha in enumerate(space.monomials):
            if sum(alpha) > valid:
                break
            coeffs[k] = self.derivative(alpha, x) / space.factorial[k]
        return TensorJet(space, coeffs, valid)


# -- values ------------------------------------------------------------------


@dataclass(frozen=True)
class TensorFieldValue:
    """Components of a tensor at a chart point.

    ``variance`` has one character per axis, ``"u"`` (contravariant) or ``"l"``
    (covariant).
    """

    components: np.ndarray
    variance: str
    point: tuple

    def __post_init__(self):
        n = len(self.point)
        if self.components.shape != (n,) * len(self.variance):
            raise ValueError(f"expected {n ** len(self.variance)} components of shape {(n,) * len(self.variance)}")

    @property
    def covariant_rank(self) -> int:
        return self.variance.count("l")

    @property
    def contravariant_rank(self) -> int:
        return self.variance.count("u")


@dataclass(frozen=True)
class CurvatureValue:
    """``riemann[p, i, j, k]`` is ``R^p_{ijk}``: it multiplies ``tau_p`` in ``tau_{i;j;k} - tau_{i;k;j}``."""

    riemann: np.ndarray
    torsion: np.ndarray
    point: tuple

    def ricci(self) -> np.ndarray:
        return np.einsum("pipk->ik", self.riemann)


def _bind(expr, local: dict):
    """Replace free symbols by the chart coordinates of the same name."""
    return expr.xreplace({s: local[s.name] for s in expr.free_symbols if s.name in local})


class TensorField:
    """A tensor field on a chart, from sympy expressions or a numeric callable."""

    def __init__(self, components, variance: str, conn: "ChartConnection", order: int = K_MAX + 1):
        self.variance = variance
        n = conn.n
        shape = (n,) * len(variance)
        if callable(components) and not isinstance(components, sp.Basic):
            self._data = SampledTensor(components, shape, n, order)
        else:
            arr = np.array(components, dtype=object)
            if arr.shape != shape:
                raise ValueError(f"components must have shape {shape}, got {arr.shape}")
            local = {str(c): c for c in conn.coords}
            arr = np.vectorize(lambda e: _bind(sp.sympify(e, locals=local), local), otypes=[object])(arr)
            self._data = ExpressionTensor(arr, conn.coords, order)

    @classmethod
    def scalar(cls, expr, conn, order: int = K_MAX + 1) -> "TensorField":
        return cls(expr, "", conn, order)

    def jet(self, space, x, valid=None, exact=False) -> TensorJet:
        return self._data.jet(space, x, valid, exact)

    def __call__(self, x) -> np.ndarray:
        return self._data(x)


def as_field(f, conn, variance: str = "") -> TensorField:
    return f if isinstance(f, TensorField) else TensorField(f, variance, conn)


# -- connections --------------------------------------------------------------


class ChartConnection:
    """Christoffel coefficients on one chart.

    ``gamma[j, i, k]`` is ``Gamma^j_{ik}``, entering the covariant derivative as
    ``tau_{k;i} = d_i tau_k - Gamma^j_{ik} tau_j``.
    """

    def __init__(
        self,
        name: str,
        coords: Sequence[sp.Symbol],
        christoffel=None,
        metric: sp.Matrix | None = None,
        box: Sequence[Sequence[float]] | None = None,
        sampled: Callable | None = None,
        jet_order: int = K_MAX,
    ):
        self.name = name
        self.coords = tuple(coords)
        self.n = n = len(self.coords)
        self.metric = None if metric is None else sp.Matrix(metric)
        self.box = None if box is None else np.asarray(box, dtype=float)
        if self.box is not None and self.box.shape != (n, 2):
            raise ValueError(f"box must have shape ({n}, 2)")
        self.jet_order = jet_order
        if sampled is not None:
            self._gamma = SampledTensor(sampled, (n, n, n), n, jet_order)
            self.christoffel = None
        else:
            self.christoffel = np.array(christoffel, dtype=object).reshape(n, n, n)
            self._gamma = ExpressionTensor(self.christoffel, self.coords, jet_order)
        if self.metric is not None:
            self._metric = ExpressionTensor(np.array(self.metric.tolist(), dtype=object), self.coords, jet_order)
            self._inverse_metric = ExpressionTensor(
                np.array(sp.simplify(self.metric.inv()).tolist(), dtype=object), self.coords, jet_order
            )

    # -- constructors ---------------------------------------------------

    @classmethod
    def flat(cls, n: int, box=None) -> "ChartConnection":
        coords = sp.symbols(f"x1:{n + 1}", real=True)
        return cls("flat", coords, np.zeros((n, n, n), dtype=object), sp.eye(n), box)

    @classmethod
    def from_metric(cls, name, coords, metric, box=None, jet_order=K_MAX) -> "ChartConnection":
        coords = tuple(coords)
        g = sp.Matrix(metric)
        ginv = sp.simplify(g.inv())
        n = len(coords)
        gamma = np.empty((n, n, n), dtype=object)
        for j in range(n):
            for i in range(n):
                for k in range(n):
                    gamma[j, i, k] = sp.simplify(
                        sum(
                            ginv[j, l] * (sp.diff(g[l, k], coords[i]) + sp.diff(g[l, i], coords[k]) - sp.diff(g[i, k], coords[l]))
                            for l in range(n)
                        )
                        / 2
                    )
        return cls(name, coords, gamma, g, box, jet_order=jet_order)

    @classmethod
    def sphere2(cls, box=((0.3, math.pi - 0.3), (0.0, 2 * math.pi))) -> "ChartConnection":
        th, ph = sp.symbols("theta phi", real=True)
        return cls.from_metric("sphere2", (th, ph), sp.diag(1, sp.sin(th) ** 2), box)

    @classmethod
    def schwarzschild_spatial(cls, mass: float = 1.0, box=None) -> "ChartConnection":
        r, th, ph = sp.symbols("r theta phi", real=True)
        m = sp.nsimplify(mass)
        box = box or ((3.0 * float(mass) + 1.0, 10.0 * float(mass) + 10.0), (0.3, math.pi - 0.3), (0.0, 2 * math.pi))
        g = sp.diag(1 / (1 - 2 * m / r), r**2, r**2 * sp.sin(th) ** 2)
        return cls.from_metric("schwarzschild_spatial", (r, th, ph), g, box)

    @classmethod
    def from_christoffel(cls, exprs, n: int, name="custom", box=None) -> "ChartConnection":
        """Christoffel symbols from expression strings in ``x1..xn``, nested as ``[j][i][k]``."""
        coords = sp.symbols(f"x1:{n + 1}", real=True)
        local = {str(c): c for c in coords}
        arr = np.array(exprs, dtype=object)
        if arr.shape != (n, n, n):
            raise ValueError(f"christoffel table must have shape ({n}, {n}, {n}), got {arr.shape}")
        arr = np.vectorize(lambda e: sp.sympify(e, locals=local), otypes=[object])(arr)
        return cls(name, coords, arr, None, box)

    @classmethod
    def from_callable(cls, gamma: Callable, n: int, name="sampled", box=None) -> "ChartConnection":
        coords = sp.symbols(f"x1:{n + 1}", real=True)
        return cls(name, coords, None, None, box, sampled=gamma)

    @classmethod
    def from_json(cls, spec: dict) -> "ChartConnection":
        n = int(spec["n"])
        box = spec.get("box")
        metric = spec["metric"]
        if metric == "flat":
            conn = cls.flat(n, box)
        elif metric == "sphere2":
            conn = cls.sphere2(box) if box else cls.sphere2()
        elif metric == "schwarzschild_spatial":
            conn = cls.schwarzschild_spatial(float(spec.get("mass", 1.0)), box)
        elif isinstance(metric, dict) and "christoffel" in metric:
            conn = cls.from_christoffel(metric["christoffel"], n, spec.get("name", "custom"), box)
        else:
            raise ValueError(f"unknown metric {metric!r}")
        if conn.n != n:
            raise ValueError(f"geometry {metric!r} has dimension {conn.n}, file says {n}")
        conn.name = spec.get("name", conn.name)
        return conn

    @classmethod
    def load(cls, path) -> "ChartConnection":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"file not found: {path}")
        return cls.from_json(json.loads(path.read_text()))

    # -- evaluation -----------------------------------------------------

    @property
    def exact_capable(self) -> bool:
        return isinstance(self._gamma, ExpressionTensor)

    def check_point(self, x) -> None:
        x = np.asarray([float(t) for t in x])
        if x.shape != (self.n,) or not np.all(np.isfinite(x)):
            raise ValueError(f"expected {self.n} finite chart coordinates")
        if self.box is not None and np.any((x < self.box[:, 0]) | (x > self.box[:, 1])):
            raise ValueError(f"point {tuple(x)} lies outside the chart box")

    def gamma(self, x) -> np.ndarray:
        self.check_point(x)
        return self._gamma(x)

    def torsion(self, x) -> np.ndarray:
        G = self.gamma(x)
        return G - G.transpose(0, 2, 1)

    def gamma_jet(self, space: JetSpace, x, exact: bool = False) -> TensorJet:
        self.check_point(x)
        return self._gamma.jet(space, x, exact=exact)

    def metric_jet(self, space: JetSpace, x, inverse: bool = False) -> TensorJet:
        if self.metric is None:
            raise ValueError(f"connection {self.name!r} has no metric")
        return (self._inverse_metric if inverse else self._metric).jet(space, x)

    def metric_at(self, x, inverse: bool = False) -> np.ndarray:
        if self.metric is None:
            raise ValueError(f"connection {self.name!r} has no metric")
        return (self._inverse_metric if inverse else self._metric)(x)

    def random_points(self, rng: np.random.Generator, count: int, margin: float = 0.05) -> np.ndarray:
        if self.box is None:
            raise ValueError("random points need a chart box")
        lo, hi = self.box[:, 0], self.box[:, 1]
        pad = margin * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(count, self.n))


# -- point operations --------------------------------------------------------


def covariant_derivative(field, conn: ChartConnection, x, variance: str | None = None) -> TensorFieldValue:
    """``tau_{I;i}`` at ``x``; the derivative index comes last."""
    field = as_field(field, conn, variance or "")
    space = JetSpace.get(conn.n, 1)
    tau = field.jet(space, x)
    out = covariant_derivative_jet(tau, conn.gamma_jet(space, x), field.variance)
    return TensorFieldValue(out.value, field.variance + "l", tuple(map(float, x)))


def iterated_scalar_derivative(f, conn: ChartConnection, x, k: int) -> TensorFieldValue:
    """``f_{;i1;...;ik}`` at ``x``."""
    if not 1 <= k <= K_MAX:
        raise ValueError(f"derivative order must be between 1 and {K_MAX}, got {k}")
    field = as_field(f, conn)
    space = JetSpace.get(conn.n, k)
    out = iterated_covariant_derivative(field.jet(space, x), conn.gamma_jet(space, x), k)
    return TensorFieldValue(out.value, "l" * k, tuple(map(float, x)))


def curvature_from_gamma_jet(gamma: TensorJet) -> np.ndarray:
    """``R^p_{ijk} = d_j G^p_{ki} - d_k G^p_{ji} + G^p_{jq} G^q_{ki} - G^p_{kq} G^q_{ji}``."""
    G = gamma.value
    dG = gamma.gradient().value  # dG[p, a, b, c] = d_c G^p_{ab}
    R = np.einsum("pkij->pijk", dG) - np.einsum("pjik->pijk", dG)
    R = R + np.einsum("pjq,qki->pijk", G, G) - np.einsum("pkq,qji->pijk", G, G)
    return R


def curvature_torsion(conn: ChartConnection, x) -> CurvatureValue:
    space = JetSpace.get(conn.n, 1)
    gamma = conn.gamma_jet(space, x)
    G = gamma.value
    return CurvatureValue(curvature_from_gamma_jet(gamma), G - G.transpose(0, 2, 1), tuple(map(float, x)))


def scalar_curvature(conn: ChartConnection, x) -> float:
    cv = curvature_torsion(conn, x)
    return float(np.einsum("ik,ik->", conn.metric_at(x, inverse=True), cv.ricci()))


def commutator_rhs(tau: np.ndarray, dtau: np.ndarray, cv: CurvatureValue) -> np.ndarray:
    """Curvature and torsion terms of ``tau_{I;j;k} - tau_{I;k;j}`` for a covariant tensor.

    The torsion term enters as ``+ tau_{I;q} T^q_{jk}``, the sign that follows from
    the covariant-derivative convention of :class:`ChartConnection`.
    """
    m = tau.ndim
    letters = "abcdefgh"[:m]
    out = np.einsum(f"{letters}q,qjk->{letters}jk", dtau, cv.torsion)
    for nu in range(m):
        renamed = letters[:nu] + "p" + letters[nu + 1:]
        out = out + np.einsum(f"{renamed},p{letters[nu]}jk->{letters}jk", tau, cv.riemann)
    return out


def ricci_identity_check(field, conn: ChartConnection, x, variance: str | None = None) -> float:
    """Max-norm residual of the commutator identity for a covariant tensor field at ``x``."""
    field = as_field(field, conn, variance or "")
    if "u" in field.variance or "." in field.variance:
        raise ValueError("commutator identity is implemented for covariant tensors")
    space = JetSpace.get(conn.n, 2)
    gamma = conn.gamma_jet(space, x)
    tau = field.jet(space, x)
    d1 = covariant_derivative_jet(tau, gamma)
    d2 = covariant_derivative_jet(d1, gamma).value
    m = tau.rank
    lhs = d2 - np.swapaxes(d2, m, m + 1)
    rhs = commutator_rhs(tau.value, d1.value, curvature_torsion(conn, x))
    return float(np.max(np.abs(lhs - rhs)))
