"""Parametrices with cutoff amplitudes and the Laplacian fundamental solution.

For a constant-coefficient symbol ``p`` the parametrix amplitude is
``q = chi / p`` with a radial cutoff ``chi`` that vanishes on ``|xi| <= r0``
and equals one on ``|xi| >= r1``.  Then ``PQ = I + R`` where the Fourier
transform of ``Rf`` is ``(chi - 1) f^``, supported in ``|xi| < r1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gamma

from .exact import i_power, multi_indices
from .symbols import GridFunction, PolySymbol, apply_symbol, compose_symbols, estimate_symbol_class, leading_symbol

# smoothstep polynomials S(t) on [0, 1]; degree 5 is C^2 at both ends
_SMOOTHSTEP = {
    3: lambda t: t * t * (3 - 2 * t),
    5: lambda t: t**3 * (10 - 15 * t + 6 * t * t),
    7: lambda t: t**4 * (35 - 84 * t + 70 * t * t - 20 * t**3),
}


@dataclass(frozen=True)
class CutoffSpec:
    """Radial cutoff ``chi``: 0 for ``|xi| <= r0``, 1 for ``|xi| >= r1``."""

    r0: float
    r1: float
    degree: int = 5

    def __post_init__(self):
        if not 0 < self.r0 < self.r1:
            raise ValueError(f"need 0 < r0 < r1, got r0={self.r0}, r1={self.r1}")
        if self.degree not in _SMOOTHSTEP:
            raise ValueError(f"smoothstep degree must be one of {sorted(_SMOOTHSTEP)}")

    def __call__(self, xi) -> np.ndarray:
        r = np.linalg.norm(np.asarray(xi, dtype=float), axis=-1)
        t = np.clip((r - self.r0) / (self.r1 - self.r0), 0.0, 1.0)
        return _SMOOTHSTEP[self.degree](t)

    def to_dict(self) -> dict:
        return {"r0": self.r0, "r1": self.r1}


@dataclass
class ParametrixAmplitude:
    """Evaluable amplitude ``q(x, xi)`` with its provenance."""

    amplitude: Callable[[np.ndarray, np.ndarray], np.ndarray]
    source: object
    cutoff: CutoffSpec
    mode: str = "constant"

    def __call__(self, x, xi) -> np.ndarray:
        return self.amplitude(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))


def _sample_directions(n: int, count: int = 16) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        t = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    # axes, diagonals and a deterministic spread of extra points
    dirs = [v for v in np.eye(n)] + [-v for v in np.eye(n)]
    for signs in np.ndindex(*(2,) * n):
        v = np.array([1.0 if s else -1.0 for s in signs])
        dirs.append(v / np.linalg.norm(v))
    rng = np.random.default_rng(0)
    extra = rng.normal(size=(count, n))
    dirs.extend(extra / np.linalg.norm(extra, axis=1, keepdims=True))
    return np.array(dirs)


def _guarded_ratio(chi: np.ndarray, denom: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast_shapes(chi.shape, denom.shape), dtype=complex)
    live = np.broadcast_to(chi != 0, out.shape)
    denom = np.broadcast_to(denom, out.shape)
    out[live] = np.broadcast_to(chi, out.shape)[live] / denom[live]
    return out


def cutoff_amplitude(p: PolySymbol, spec: CutoffSpec) -> ParametrixAmplitude:
    """Constant-coefficient parametrix amplitude ``chi(xi) / p(xi)``.

    ``p`` must be free of zeros on ``|xi| >= r0``; this is checked on dyadic
    radii ``r0 * 2**j`` plus a few radii inside the transition annulus.
    """
    if not p.is_x_independent():
        raise ValueError("cutoff_amplitude needs an x-independent symbol; use frozen_amplitude")
    radii = np.concatenate([np.linspace(spec.r0, spec.r1, 5), spec.r0 * 2.0 ** np.arange(1, 12)])
    dirs = _sample_directions(p.n)
    pts = radii[:, None, None] * dirs[None, :, :]
    vals = np.abs(p(np.zeros(p.n), pts))
    scale = max(1.0, float(vals.max()))
    if np.any(vals <= 1e-12 * scale):
        r = radii[np.argwhere(vals <= 1e-12 * scale)[0][0]]
        raise ValueError(f"symbol has a zero in the support of the cutoff (|xi| = {r:g})")

    def q(x, xi):
        return _guarded_ratio(spec(xi), p(np.zeros(p.n), xi))

    return ParametrixAmplitude(q, p, spec, "constant")


def frozen_amplitude(p: PolySymbol, spec: CutoffSpec) -> ParametrixAmplitude:
    """Frozen-coefficient amplitude ``chi(xi) / p(x, xi)``, evaluated per output point."""

    def q(x, xi):
        return _guarded_ratio(spec(xi), p(x, xi))

    return ParametrixAmplitude(q, p, spec, "frozen")


def parametrix_apply(q: ParametrixAmplitude, f: GridFunction, chunk: int = 256) -> GridFunction:
    """Apply ``Q`` with amplitude ``q`` to a periodic grid function.

    Constant mode multiplies the DFT by ``q(xi)``.  Frozen and iterative modes
    evaluate ``q(x, xi)`` at every output point and frequency, which costs
    ``O(M^2)`` for ``M`` samples.
    """
    if not f.periodic:
        raise ValueError("parametrix_apply needs a periodic grid")
    fhat = f.fourier()
    freqs = f.frequency_points()
    if q.mode == "constant":
        mult = q(np.zeros(f.n), freqs)
        if not np.all(np.isfinite(mult)):
            raise ValueError("non-finite amplitude at a grid frequency")
        return f.with_values(np.fft.ifftn(mult * fhat))

    pts = f.points().reshape(-1, f.n)
    rel = pts - np.asarray(f.origin)
    k = freqs.reshape(-1, f.n)
    F = fhat.reshape(-1)
    out = np.empty(len(pts), dtype=complex)
    for start in range(0, len(pts), chunk):
        xs = pts[start:start + chunk]
        amp = q(xs[:, None, :], k[None, :, :])
        if not np.all(np.isfinite(amp)):
            raise ValueError("non-finite amplitude at a grid frequency")
        phase = np.exp(1j * rel[start:start + chunk] @ k.T)
        out[start:start + chunk] = (phase * amp) @ F
    return f.with_values(out.reshape(f.shape) / F.size)


@dataclass
class RemainderReport:
    """Outcome of ``P Q f - f`` on a grid."""

    remainder: GridFunction
    tail_norm: float
    max_highband_residual: float
    identity_residual: float
    cutoff: CutoffSpec

    def to_dict(self) -> dict:
        return {
            "tail_norm": self.tail_norm,
            "max_highband_residual": self.max_highband_residual,
            "cutoff": self.cutoff.to_dict(),
        }


def remainder_report(p: PolySymbol, q: ParametrixAmplitude, f: GridFunction) -> RemainderReport:
    """Compute ``Rf = P(Qf) - f`` and measure its Fourier content.

    ``max_highband_residual`` is ``max |FT(Rf)|`` over ``|xi| >= r1`` and
    ``identity_residual`` is ``max |FT(Rf) - (chi - 1) f^|`` over all
    frequencies, both relative to ``max |f^|``.  ``tail_norm`` is the L2 norm of
    ``FT(Rf)`` over ``|xi| >= r1`` relative to ``||f^||_2``.
    """
    Qf = parametrix_apply(q, f)
    Rf = apply_symbol(p, Qf).values - f.values
    rhat = np.fft.fftn(Rf)
    fhat = f.fourier()
    freqs = f.frequency_points()
    chi = q.cutoff(freqs)
    high = np.linalg.norm(freqs, axis=-1) >= q.cutoff.r1
    peak = float(np.max(np.abs(fhat))) or 1.0
    l2 = float(np.linalg.norm(fhat)) or 1.0
    return RemainderReport(
        remainder=f.with_values(Rf),
        tail_norm=float(np.linalg.norm(rhat[high])) / l2,
        max_highband_residual=float(np.max(np.abs(rhat[high]), initial=0.0)) / peak,
        identity_residual=float(np.max(np.abs(rhat - (chi - 1) * fhat))) / peak,
        cutoff=q.cutoff,
    )


# --------------------------------------------------------------------------
# Fundamental solution of the Laplacian


def laplacian_kernel_constant(n: int) -> float:
    """``-Gamma(n/2 - 1) / (4 pi^(n/2))``, the coefficient of ``|x|^(2-n)``."""
    if n < 3:
        raise ValueError("the |x|^(2-n) kernel needs n >= 3")
    return -gamma(n / 2 - 1) / (4 * math.pi ** (n / 2))


def _cell_average_of_kernel(n: int, h) -> float:
    """Average of ``|x|^(2-n)`` over the cell ``prod [-h_i/2, h_i/2]``.

    Uses ``div(x |x|^(2-n)) = 2 |x|^(2-n)`` to turn the singular volume integral
    into smooth face integrals, evaluated by Gauss-Legendre quadrature.
    """
    h = np.asarray(h, dtype=float)
    nodes, weights = np.polynomial.legendre.leggauss(24)
    total = 0.0
    for i in range(n):
        others = [j for j in range(n) if j != i]
        grids = np.meshgrid(*[nodes * h[j] / 2 for j in others], indexing="ij")
        w = np.ones_like(grids[0])
        for axis, j in enumerate(others):
            shape = [1] * (n - 1)
            shape[axis] = -1
            w = w * (weights * h[j] / 2).reshape(shape)
        r2 = (h[i] / 2) ** 2 + sum(g**2 for g in grids)
        face = np.sum(w * r2 ** ((2 - n) / 2))
        # two faces, normal component h_i/2, and the factor 1/2 from the divergence identity
        total += face * (h[i] / 2)
    return total / np.prod(h)


def greens_laplacian(f, n: int | None = None, *, counts=None, extents=None, origin=None) -> GridFunction:
    """``u(x) = -Gamma(n/2-1)/(4 pi^(n/2)) int f(y) |x-y|^(2-n) dy`` on the sample box.

    ``f`` is a :class:`GridFunction` or a callable sampled on ``counts`` cells
    spanning ``extents`` from ``origin``.  The integral is a midpoint rule over
    the cells; the singular self-cell uses the exact cell average of the kernel.
    """
    if not isinstance(f, GridFunction):
        if counts is None or extents is None:
            raise ValueError("sampling a callable needs counts and extents")
        f = GridFunction.sample(f, counts, extents, origin, periodic=False)
    if n is not None and n != f.n:
        raise ValueError(f"dimension mismatch: n={n} but grid has {f.n} axes")
    n = f.n
    c = laplacian_kernel_constant(n)
    h = np.asarray(f.spacing)
    offsets = np.meshgrid(*[hi * np.arange(-(s - 1), s) for hi, s in zip(h, f.shape)], indexing="ij", sparse=True)
    r2 = sum(o**2 for o in offsets)
    centre = tuple(s - 1 for s in f.shape)
    with np.errstate(divide="ignore"):
        kernel = r2 ** ((2 - n) / 2)
    kernel[centre] = _cell_average_of_kernel(n, h)
    kernel *= c * np.prod(h)
    u = fftconvolve(f.values, kernel, mode="valid")
    return GridFunction(u, f.extents, f.origin, periodic=False)


def discrete_laplacian(values: np.ndarray, spacing) -> np.ndarray:
    """Second-order ``sum_k d^2/dx_k^2`` at interior points (one layer trimmed per side)."""
    n = values.ndim
    inner = tuple(slice(1, -1) for _ in range(n))
    out = np.zeros(tuple(s - 2 for s in values.shape), dtype=values.dtype)
    for k, hk in enumerate(spacing):
        lo = list(inner)
        hi = list(inner)
        lo[k] = slice(0, -2)
        hi[k] = slice(2, None)
        out += (values[tuple(lo)] - 2 * values[inner] + values[tuple(hi)]) / hk**2
    return out


# --------------------------------------------------------------------------
# Iterative elliptic parametrix


class RationalSymbol:
    """``numerator / base**power`` with polynomial numerator and base."""

    __slots__ = ("num", "base", "power")

    def __init__(self, num: PolySymbol, base: PolySymbol, power: int):
        if num.n != base.n:
            raise ValueError("dimension mismatch")
        self.num, self.base, self.power = num, base, power

    @property
    def n(self) -> int:
        return self.num.n

    @property
    def degree(self) -> int:
        """Nominal order in ``xi`` (exact when numerator and base are homogeneous)."""
        if self.num.is_zero():
            return -(10**9)
        return self.num.degree - self.power * self.base.degree

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def _lift(self, power: int) -> PolySymbol:
        return self.num * self.base ** (power - self.power)

    def __add__(self, other):
        if isinstance(other, RationalSymbol):
            if other.base != self.base:
                raise ValueError("rational symbols with different bases")
            p = max(self.power, other.power)
            return RationalSymbol(self._lift(p) + other._lift(p), self.base, p)
        if isinstance(other, PolySymbol) or not hasattr(other, "n"):
            try:
                poly = other if isinstance(other, PolySymbol) else PolySymbol.constant(self.n, other)
            except TypeError:
                return NotImplemented
            return RationalSymbol(self.num + poly * self.base**self.power, self.base, self.power)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return RationalSymbol(-self.num, self.base, self.power)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, RationalSymbol):
            if other.base != self.base:
                raise ValueError("rational symbols with different bases")
            return RationalSymbol(self.num * other.num, self.base, self.power + other.power)
        try:
            return RationalSymbol(self.num * other, self.base, self.power)
        except TypeError:
            return NotImplemented

    __rmul__ = __mul__

    def _d(self, which: str, i: int) -> "RationalSymbol":
        dn = getattr(self.num, which)(i)
        db = getattr(self.base, which)(i)
        return RationalSymbol(dn * self.base - self.num * db * self.power, self.base, self.power + 1)

    def d_x(self, i: int, times: int = 1) -> "RationalSymbol":
        out = self
        for _ in range(times):
            out = out._d("d_x", i)
        return out

    def d_xi(self, i: int, times: int = 1) -> "RationalSymbol":
        out = self
        for _ in range(times):
            out = out._d("d_xi", i)
        return out

    def d_x_multi(self, alpha) -> "RationalSymbol":
        out = self
        for i, a in enumerate(alpha):
            if a:
                out = out.d_x(i, a)
        return out

    def d_xi_multi(self, alpha) -> "RationalSymbol":
        out = self
        for i, a in enumerate(alpha):
            if a:
                out = out.d_xi(i, a)
        return out

    def __call__(self, x, xi) -> np.ndarray:
        return self.num(x, xi) / self.base(x, xi) ** self.power

    def __repr__(self) -> str:
        return f"RationalSymbol(({self.num}) / ({self.base})^{self.power})"


@dataclass
class ExpansionTerm:
    symbol: RationalSymbol
    nominal_order: int
    fitted_order: float | None = None


@dataclass
class EllipticParametrix:
    """Terms ``q_0, ..., q_N`` of an iterative parametrix and its cutoff."""

    operator: PolySymbol
    terms: list[ExpansionTerm]
    cutoff: CutoffSpec
    x_box: np.ndarray = field(repr=False, default=None)

    def total(self) -> RationalSymbol:
        out = self.terms[0].symbol
        for t in self.terms[1:]:
            out = out + t.symbol
        return out

    def amplitude(self) -> ParametrixAmplitude:
        total = self.total()

        def q(x, xi):
            chi = self.cutoff(xi)
            out = np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(xi)[:-1]), dtype=complex)
            live = np.broadcast_to(chi != 0, out.shape)
            xb = np.broadcast_to(x, out.shape + (np.shape(x)[-1],))
            kb = np.broadcast_to(xi, out.shape + (np.shape(xi)[-1],))
            out[live] = np.broadcast_to(chi, out.shape)[live] * total(xb[live], kb[live])
            return out

        return ParametrixAmplitude(q, self, self.cutoff, "iterative")

    def residual(self) -> RationalSymbol:
        """``sigma(P o Q) - 1`` computed exactly by the composition formula."""
        return compose_symbols(self.operator, self.total(), self.operator.degree) - 1


def elliptic_parametrix_expansion(sigma_p: PolySymbol, order: int, spec: CutoffSpec, x_box=None, fit: bool = True) -> EllipticParametrix:
    """Parametrix terms ``q_0 .. q_order`` for an elliptic polynomial symbol.

    ``q_0 = 1 / p_d`` with ``p_d`` the leading symbol, and for ``m >= 1``::

        q_m = -(1/p_d) sum_{l + |k| + j = m, j < m} i^-|k|/k! d_xi^k p_{d-l} d_x^k q_j

    so that the composition with ``sigma_p`` equals ``1 + O(|xi|^-(m+1))``.
    The cutoff multiplies the sum; on ``|xi| >= r1`` it is identically one.
    """
    n = sigma_p.n
    box = np.array([[-1.0, 1.0]] * n if x_box is None else x_box, dtype=float)
    lead = leading_symbol(sigma_p)
    d = lead.degree
    corners = np.array(np.meshgrid(*box, indexing="ij")).reshape(n, -1).T
    xs = np.vstack([box.mean(axis=1), corners, box[:, 0] + (box[:, 1] - box[:, 0]) * 0.3])
    dirs = _sample_directions(n)
    vals = np.abs(lead(xs[:, None, :], dirs[None, :, :]))
    if np.any(vals <= 1e-12 * max(1.0, float(vals.max()))):
        raise ValueError("ellipticity check failed: leading symbol vanishes on |xi| = 1")
    parts = {l: sigma_p.homogeneous_part(d - l) for l in range(d + 1)}
    q: list[RationalSymbol] = [RationalSymbol(PolySymbol.constant(n), lead, 1)]
    for m in range(1, order + 1):
        acc = None
        for j in range(m):
            for l in range(0, m - j + 1):
                kk = m - j - l
                part = parts.get(l)
                if part is None or part.is_zero():
                    continue
                for k in multi_indices(n, kk, kk):
                    dp = part.d_xi_multi(k)
                    if dp.is_zero():
                        continue
                    coef = i_power(-k.order) * Fraction(1, k.factorial())
                    term = (dp * coef) * q[j].d_x_multi(k)
                    acc = term if acc is None else acc + term
        if acc is None:
            q.append(RationalSymbol(PolySymbol(n), lead, 1))
        else:
            q.append(RationalSymbol(-acc.num, lead, acc.power + 1))
    terms = [ExpansionTerm(qm, -d - m) for m, qm in enumerate(q)]
    if fit:
        for t in terms:
            if t.symbol.is_zero():
                continue
            est = estimate_symbol_class(t.symbol, 1.0, (0,) * n, (0,) * n, x_box=box)
            t.fitted_order = est.omega
    return EllipticParametrix(sigma_p, terms, spec, box)
