"""Exact symbol algebra on R^n.

Symbols are polynomials in the covector variable ``xi`` whose coefficients are
polynomials in ``x``.  A differential operator ``sum_a a_a(x) D^a`` with
``D = -i d/dx`` has the symbol ``sum_a a_a(x) xi^a``.  Coefficients are kept as
:class:`~psido.exact.GaussianRational` so that composition identities can be
checked with ``==``.

Fourier transforms use the symmetric ``(2 pi)^(-n/2)`` normalization; on a
periodic grid the normalization cancels between the forward and inverse
discrete transforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

from .exact import GaussianRational, MultiIndex, binomial, bounded_indices, i_power, multi_indices

Key = tuple[tuple[int, ...], tuple[int, ...]]


def _zero(n: int) -> tuple[int, ...]:
    return (0,) * n


def _unit(n: int, i: int, k: int = 1) -> tuple[int, ...]:
    e = [0] * n
    e[i] = k
    return tuple(e)


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


class PolySymbol:
    """Polynomial in ``(x, xi)`` with exact complex-rational coefficients.

    ``terms`` maps ``(x_exponent, xi_exponent)`` to a coefficient.  Zero
    coefficients are never stored, so two symbols are equal iff their term
    dictionaries are equal.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Key, object] | None = None):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        self.n = n
        clean: dict[Key, GaussianRational] = {}
        for (xe, ke), c in (terms or {}).items():
            xe, ke = tuple(int(e) for e in xe), tuple(int(e) for e in ke)
            if len(xe) != n or len(ke) != n or min(xe + ke) < 0:
                raise ValueError(f"bad exponent pair {xe}, {ke} for n={n}")
            c = GaussianRational.coerce(c)
            if c:
                clean[(xe, ke)] = clean.get((xe, ke), GaussianRational()) + c
                if not clean[(xe, ke)]:
                    del clean[(xe, ke)]
        self.terms = clean

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, n: int, c=1) -> "PolySymbol":
        return cls(n, {(_zero(n), _zero(n)): c})

    @classmethod
    def x(cls, n: int, i: int) -> "PolySymbol":
        return cls(n, {(_unit(n, i), _zero(n)): 1})

    @classmethod
    def xi(cls, n: int, i: int) -> "PolySymbol":
        return cls(n, {(_zero(n), _unit(n, i)): 1})

    @classmethod
    def xi_norm_squared(cls, n: int) -> "PolySymbol":
        return cls(n, {(_zero(n), _unit(n, i, 2)): 1 for i in range(n)})

    # structure ----------------------------------------------------------
    @property
    def degree(self) -> int:
        """Order in ``xi``; ``-1`` for the zero symbol."""
        return max((sum(ke) for _, ke in self.terms), default=-1)

    @property
    def x_degree(self) -> int:
        return max((sum(xe) for xe, _ in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def is_x_independent(self) -> bool:
        return all(not any(xe) for xe, _ in self.terms)

    def homogeneous_part(self, d: int) -> "PolySymbol":
        return PolySymbol(self.n, {k: c for k, c in self.terms.items() if sum(k[1]) == d})

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "PolySymbol") -> None:
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def __eq__(self, other) -> bool:
        if isinstance(other, PolySymbol):
            return self.n == other.n and self.terms == other.terms
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self == PolySymbol.constant(self.n, other)

    __hash__ = None  # type: ignore[assignment]

    def __add__(self, other):
        if not isinstance(other, PolySymbol):
            try:
                other = PolySymbol.constant(self.n, other)
            except TypeError:
                return NotImplemented
        self._check(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, GaussianRational()) + c
        return PolySymbol(self.n, terms)

    __radd__ = __add__

    def __neg__(self) -> "PolySymbol":
        return PolySymbol(self.n, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PolySymbol):
            try:
                c = GaussianRational.coerce(other)
            except TypeError:
                return NotImplemented
            return PolySymbol(self.n, {k: v * c for k, v in self.terms.items()})
        self._check(other)
        out: dict[Key, GaussianRational] = {}
        for (xa, ka), ca in self.terms.items():
            for (xb, kb), cb in other.terms.items():
                key = (_add(xa, xb), _add(ka, kb))
                out[key] = out.get(key, GaussianRational()) + ca * cb
        return PolySymbol(self.n, out)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, k: int) -> "PolySymbol":
        out = PolySymbol.constant(self.n)
        for _ in range(k):
            out = out * self
        return out

    # derivatives --------------------------------------------------------
    def _diff(self, which: int, i: int, times: int) -> "PolySymbol":
        out = {}
        for key, c in self.terms.items():
            e = key[which][i]
            if e < times:
                continue
            new = list(key[which])
            new[i] = e - times
            nkey = (tuple(new), key[1]) if which == 0 else (key[0], tuple(new))
            out[nkey] = c * (math.factorial(e) // math.factorial(e - times))
        return PolySymbol(self.n, out)

    def d_x(self, i: int, times: int = 1) -> "PolySymbol":
        return self._diff(0, i, times)

    def d_xi(self, i: int, times: int = 1) -> "PolySymbol":
        return self._diff(1, i, times)

    def d_x_multi(self, alpha: Iterable[int]) -> "PolySymbol":
        out = self
        for i, a in enumerate(alpha):
            if a:
                out = out.d_x(i, a)
        return out

    def d_xi_multi(self, alpha: Iterable[int]) -> "PolySymbol":
        out = self
        for i, a in enumerate(alpha):
            if a:
                out = out.d_xi(i, a)
        return out

    # evaluation ---------------------------------------------------------
    def __call__(self, x, xi) -> np.ndarray:
        """Evaluate at ``x`` and ``xi``, arrays with trailing axis of length ``n``."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
        out = np.zeros(shape, dtype=complex)
        for (xe, ke), c in self.terms.items():
            out = out + complex(c) * _monomial(x, xe) * _monomial(xi, ke)
        return out

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {"x": list(xe), "xi": list(ke), "re": _qstr(c.re), "im": _qstr(c.im)}
                for (xe, ke), c in sorted(self.terms.items(), key=_term_order)
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PolySymbol":
        n = int(data["n"])
        terms: dict[Key, GaussianRational] = {}
        for t in data["terms"]:
            key = (tuple(t["x"]), tuple(t["xi"]))
            c = GaussianRational.parse(str(t.get("re", "0")), str(t.get("im", "0")))
            terms[key] = terms.get(key, GaussianRational()) + c
        return cls(n, terms)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "PolySymbol":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        return f"PolySymbol({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (xe, ke), c in sorted(self.terms.items(), key=_term_order):
            mono = "*".join(m for m in (_mono_str("x", xe), _mono_str("xi", ke)) if m)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _qstr(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _term_order(item):
    (xe, ke), _ = item
    return (-sum(ke), tuple(-e for e in ke), sum(xe), tuple(-e for e in xe))


def _mono_str(name: str, exps) -> str:
    out = []
    for i, e in enumerate(exps, start=1):
        if e == 1:
            out.append(f"{name}{i}")
        elif e > 1:
            out.append(f"{name}{i}^{e}")
    return "*".join(out)


def _monomial(z: np.ndarray, exps) -> np.ndarray:
    out = np.ones(z.shape[:-1])
    for i, e in enumerate(exps):
        if e:
            out = out * z[..., i] ** e
    return out


class DiffOperator:
    """``P = sum_a a_a(x) D^a`` with ``D^a = (-i)^|a| d^a`` and polynomial ``a_a``.

    Coefficients are :class:`PolySymbol` instances without ``xi`` dependence.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Iterable[int], object] | None = None):
        self.n = n
        clean: dict[tuple[int, ...], PolySymbol] = {}
        for alpha, coef in (terms or {}).items():
            alpha = tuple(MultiIndex(alpha))
            if len(alpha) != n:
                raise ValueError(f"multi-index {alpha} has wrong length for n={n}")
            if not isinstance(coef, PolySymbol):
                coef = PolySymbol.constant(n, coef)
            if coef.n != n or coef.degree > 0:
                raise ValueError("operator coefficients must be polynomials in x only")
            total = clean.get(alpha, PolySymbol(n)) + coef
            if total.is_zero():
                clean.pop(alpha, None)
            else:
                clean[alpha] = total
        self.terms = clean

    @classmethod
    def identity(cls, n: int) -> "DiffOperator":
        return cls(n, {_zero(n): 1})

    @classmethod
    def laplacian(cls, n: int) -> "DiffOperator":
        """``sum_k d^2/dx_k^2``; in ``D`` notation each term is ``-D_k^2``."""
        return cls(n, {_unit(n, k, 2): -1 for k in range(n)})

    @classmethod
    def partial(cls, n: int, alpha: Iterable[int]) -> "DiffOperator":
        """The plain derivative ``d^alpha = i^|alpha| D^alpha``."""
        alpha = tuple(alpha)
        return cls(n, {alpha: i_power(sum(alpha))})

    @property
    def order(self) -> int:
        return max((sum(a) for a in self.terms), default=-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        terms: dict = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms[a] + c if a in terms else c
        return DiffOperator(self.n, terms)

    def __mul__(self, c) -> "DiffOperator":
        return DiffOperator(self.n, {a: p * c for a, p in self.terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "DiffOperator") -> "DiffOperator":
        """Operator product by the Leibniz rule on the coefficients of ``other``."""
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")
        out: dict[tuple[int, ...], PolySymbol] = {}
        for alpha, a in self.terms.items():
            for beta, b in other.terms.items():
                for gamma in bounded_indices(alpha):
                    # D^gamma b = (-i)^|gamma| d^gamma b
                    db = b.d_x_multi(gamma) * (i_power(-sum(gamma)) * binomial(alpha, gamma))
                    if db.is_zero():
                        continue
                    key = tuple(MultiIndex(alpha) - gamma + MultiIndex(beta))
                    term = a * db
                    out[key] = out[key] + term if key in out else term
        return DiffOperator(self.n, out)

    def conjugate_plane_wave(self, amplitude: PolySymbol | None = None) -> PolySymbol:
        """``exp(-i xi.x) P (q exp(i xi.x))`` for a polynomial amplitude ``q``.

        Each ``D_j`` acts on the amplitude as ``q -> xi_j q - i dq/dx_j``.
        With ``q = 1`` this is the symbol of ``P`` read off from plane waves.
        """
        q = PolySymbol.constant(self.n) if amplitude is None else amplitude
        out = PolySymbol(self.n)
        for alpha, a in self.terms.items():
            r = q
            for j, times in enumerate(alpha):
                for _ in range(times):
                    r = r * PolySymbol.xi(self.n, j) + r.d_x(j) * GaussianRational(0, -1)
            out = out + a * r
        return out

    def __repr__(self) -> str:
        body = ", ".join(f"{a}: {c}" for a, c in sorted(self.terms.items()))
        return f"DiffOperator(n={self.n}, {{{body}}})"


def op_to_symbol(P: DiffOperator) -> PolySymbol:
    """Symbol ``sum_a a_a(x) xi^a`` of a differential operator."""
    out: dict[Key, GaussianRational] = {}
    for alpha, coef in P.terms.items():
        for (xe, _), c in coef.terms.items():
            out[(xe, alpha)] = c
    return PolySymbol(P.n, out)


def symbol_to_op(sigma: PolySymbol) -> DiffOperator:
    """Inverse of :func:`op_to_symbol`."""
    grouped: dict[tuple[int, ...], dict] = {}
    for (xe, ke), c in sigma.terms.items():
        grouped.setdefault(ke, {})[(xe, _zero(sigma.n))] = c
    return DiffOperator(sigma.n, {ke: PolySymbol(sigma.n, t) for ke, t in grouped.items()})


def leading_symbol(sigma: PolySymbol) -> PolySymbol:
    """Highest-order homogeneous part in ``xi``."""
    if sigma.is_zero():
        raise ValueError("empty symbol")
    return sigma.homogeneous_part(sigma.degree)


def compose_symbols(sigma_a, sigma_b, order: int):
    """Truncated composition ``sum_{|k|<=N} i^-|k|/k! (d_xi^k a)(d_x^k b)``.

    ``sigma_b`` may be any symbol type supporting ``d_x_multi`` and
    multiplication by a :class:`PolySymbol` (e.g. a rational amplitude).
    """
    if order < 0:
        raise ValueError("truncation order must be >= 0")
    if sigma_a.n != sigma_b.n:
        raise ValueError(f"dimension mismatch: {sigma_a.n} vs {sigma_b.n}")
    total = None
    for k in multi_indices(sigma_a.n, order):
        da = sigma_a.d_xi_multi(k)
        if da.is_zero():
            continue
        coef = i_power(-k.order) * Fraction(1, k.factorial())
        term = (da * coef) * sigma_b.d_x_multi(k)
        total = term if total is None else total + term
    return PolySymbol(sigma_a.n) if total is None else total


def is_exact_composition(sigma_a: PolySymbol, order: int) -> bool:
    """True when the truncated sum already contains every nonzero term."""
    return order >= sigma_a.degree


# --------------------------------------------------------------------------
# Grid realization


def _is_pow2(k: int) -> bool:
    return k > 0 and (k & (k - 1)) == 0


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on a uniform box ``origin + [0, extent)`` per axis."""

    values: np.ndarray
    extents: tuple[float, ...]
    origin: tuple[float, ...] | None = None
    periodic: bool = True

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", values)
        extents = tuple(float(e) for e in self.extents)
        object.__setattr__(self, "extents", extents)
        if values.ndim != len(extents):
            raise ValueError(f"array has {values.ndim} axes but {len(extents)} extents given")
        if any(e <= 0 for e in extents):
            raise ValueError("extents must be positive")
        if self.periodic and not all(_is_pow2(s) for s in values.shape):
            raise ValueError(f"sample counts must be powers of two, got {values.shape}")
        origin = (0.0,) * len(extents) if self.origin is None else tuple(map(float, self.origin))
        object.__setattr__(self, "origin", origin)

    @classmethod
    def sample(cls, fn: Callable, counts, extents, origin=None, periodic=True) -> "GridFunction":
        probe = cls(np.zeros(tuple(counts)), tuple(extents), origin, periodic)
        return cls(fn(*probe.axes(sparse=True)), probe.extents, probe.origin, periodic)

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / s for e, s in zip(self.extents, self.shape))

    def axes(self, sparse: bool = False) -> list[np.ndarray]:
        ax = [o + h * np.arange(s) for o, h, s in zip(self.origin, self.spacing, self.shape)]
        return np.meshgrid(*ax, indexing="ij", sparse=sparse)

    def points(self) -> np.ndarray:
        return np.stack(self.axes(), axis=-1)

    def frequencies(self, sparse: bool = False) -> list[np.ndarray]:
        """Angular wave numbers ``2 pi k / L`` (integers on a ``2 pi`` box)."""
        ax = [2 * np.pi * np.fft.fftfreq(s, d=e / s) for s, e in zip(self.shape, self.extents)]
        return np.meshgrid(*ax, indexing="ij", sparse=sparse)

    def frequency_points(self) -> np.ndarray:
        return np.stack(self.frequencies(), axis=-1)

    def fourier(self) -> np.ndarray:
        return np.fft.fftn(self.values)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(values, self.extents, self.origin, self.periodic)


def apply_symbol(sigma: PolySymbol, f: GridFunction) -> GridFunction:
    """Discrete ``(2 pi)^(-n/2) int exp(i xi.x) sigma(x, xi) f^(xi) dxi`` on a periodic grid.

    Each monomial ``c x^a xi^b`` contributes ``c x^a IFFT(xi^b FFT f)``, which is
    the per-sample evaluation of ``sigma`` at every grid frequency.
    """
    if not f.periodic:
        raise ValueError("apply_symbol needs a periodic grid")
    if sigma.n != f.n:
        raise ValueError(f"dimension mismatch: symbol n={sigma.n}, grid n={f.n}")
    fhat = f.fourier()
    freqs = f.frequencies(sparse=True)
    coords = f.axes(sparse=True)
    by_xi: dict[tuple[int, ...], list] = {}
    for (xe, ke), c in sigma.terms.items():
        by_xi.setdefault(ke, []).append((xe, complex(c)))
    out = np.zeros(f.shape, dtype=complex)
    for ke, coeffs in by_xi.items():
        mult = np.ones(f.shape)
        for w, e in zip(freqs, ke):
            if e:
                mult = mult * w**e
        transformed = np.fft.ifftn(mult * fhat)
        xpoly = np.zeros(f.shape, dtype=complex)
        for xe, c in coeffs:
            mono = np.ones(f.shape)
            for z, e in zip(coords, xe):
                if e:
                    mono = mono * z**e
            xpoly = xpoly + c * mono
        out += xpoly * transformed
    return f.with_values(out)


# --------------------------------------------------------------------------
# Symbol-class estimation

_CENTRAL = {
    0: ([0], [1.0]),
    1: ([-1, 1], [-0.5, 0.5]),
    2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
    3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
    4: ([-2, -1, 0, 1, 2], [1.0, -4.0, 6.0, -4.0, 1.0]),
}

RADII = tuple(2.0**p for p in range(4, 11))


@dataclass
class SymbolClassEstimate:
    """Fitted growth of ``|d_x^j d_xi^k sigma|`` against ``1 + |xi|``.

    ``exponents`` maps ``(j, k)`` to ``(slope, rms_residual)``; derivatives that
    vanish identically (below round-off on every sample) are listed in
    ``vanishing`` and do not contribute to ``omega``.
    """

    omega: float
    rho: float
    exponents: dict[tuple[MultiIndex, MultiIndex], tuple[float, float]] = field(default_factory=dict)
    vanishing: list[tuple[MultiIndex, MultiIndex]] = field(default_factory=list)


def _ray_directions(n: int) -> np.ndarray:
    dirs = [np.eye(n)[i] for i in range(n)]
    dirs += [-d for d in dirs]
    if n > 1:
        dirs.append(np.ones(n) / math.sqrt(n))
        golden = np.array([math.cos(2.399963 * (i + 1)) for i in range(n)])
        dirs.append(golden / np.linalg.norm(golden))
    return np.array(dirs)


def _mixed_difference(sigma, x, xi, j, k, hx, hxi):
    """Central-difference ``d_x^j d_xi^k sigma`` at the rows of ``x``, ``xi``.

    Returns the derivative estimate and a round-off floor for it.
    """
    n = x.shape[-1]
    stencils = [_CENTRAL[a] for a in tuple(j) + tuple(k)]
    steps = np.concatenate([np.full(x.shape[:-1] + (n,), hx), np.repeat(hxi[..., None], n, axis=-1)], axis=-1)
    total = 0.0
    scale = 0.0
    for combo in np.ndindex(*(len(s[0]) for s in stencils)):
        weight = 1.0
        shift = np.zeros(x.shape[:-1] + (2 * n,))
        for axis, idx in enumerate(combo):
            offs, ws = stencils[axis]
            weight *= ws[idx]
            shift[..., axis] = offs[idx]
        shift = shift * steps
        val = np.asarray(sigma(x + shift[..., :n], xi + shift[..., n:]), dtype=complex)
        total = total + weight * val
        scale = scale + abs(weight) * np.abs(val)
    denom = np.prod(steps ** np.array(list(j) + list(k)), axis=-1)
    return total / denom, 64 * np.finfo(float).eps * scale / denom


def estimate_symbol_class(
    sigma: Callable,
    rho: float,
    j_max,
    k_max,
    x_box=None,
    radii: Iterable[float] = RADII,
) -> SymbolClassEstimate:
    """Estimate the order ``omega`` of ``sigma`` in the class with parameter ``rho``.

    ``sigma(x, xi)`` must accept arrays with a trailing axis of length ``n``.
    ``j_max``/``k_max`` bound the x- and xi-multi-indices componentwise.
    Derivatives use central differences with step ``1e-4`` in ``x`` and
    ``1e-4 (1 + |xi|)`` in ``xi``; slopes come from a least-squares fit of
    ``log sup|derivative|`` against ``log(1 + |xi|)``.
    """
    if not 0.5 < rho <= 1.0:
        raise ValueError(f"rho must lie in (1/2, 1], got {rho}")
    j_max, k_max = MultiIndex(j_max), MultiIndex(k_max)
    n = len(j_max)
    if len(k_max) != n:
        raise ValueError("j_max and k_max must have the same length")
    radii = np.asarray(list(radii), dtype=float)
    if radii.size < 3:
        raise ValueError("insufficient samples: need at least three radii")
    box = np.array([[-1.0, 1.0]] * n if x_box is None else x_box, dtype=float)
    corners = np.array(np.meshgrid(*box, indexing="ij")).reshape(n, -1).T
    xs = np.vstack([box.mean(axis=1), corners])
    dirs = _ray_directions(n)

    # rows: (radius, x-sample, direction)
    R, X, Dn = np.meshgrid(np.arange(radii.size), np.arange(len(xs)), np.arange(len(dirs)), indexing="ij")
    xi = radii[R][..., None] * dirs[Dn]
    x = xs[X]
    hxi = 1e-4 * (1.0 + radii[R])

    est = SymbolClassEstimate(omega=-math.inf, rho=rho)
    for j in bounded_indices(j_max):
        for k in bounded_indices(k_max):
            if max(tuple(j) + tuple(k), default=0) > 4:
                raise ValueError("derivative order above 4 per axis is not supported")
            vals, floor = _mixed_difference(sigma, x, xi, j, k, 1e-4, hxi)
            mags = np.abs(vals)
            if not np.all(np.isfinite(mags)):
                raise ValueError(f"non-finite derivative samples for j={tuple(j)}, k={tuple(k)}")
            live = mags > floor
            if not live.any():
                est.vanishing.append((j, k))
                continue
            sup = np.where(live, mags, 0.0).reshape(radii.size, -1).max(axis=1)
            ok = sup > 0
            if ok.sum() < 3:
                raise ValueError(f"insufficient samples above round-off for j={tuple(j)}, k={tuple(k)}")
            lx = np.log1p(radii[ok])
            ly = np.log(sup[ok])
            slope, intercept = np.polyfit(lx, ly, 1)
            resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
            est.exponents[(j, k)] = (float(slope), resid)
            est.omega = max(est.omega, float(slope) + rho * k.order - (1 - rho) * j.order)
    if not est.exponents:
        raise ValueError("insufficient samples: every derivative vanished")
    return est
