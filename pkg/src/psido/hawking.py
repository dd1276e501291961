"""Radial Schwarzschild eigenproblem, Hurwitz zeta, and the Planck-factor spectral density."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import bernoulli, gamma

# -- parameters ----------------------------------------------------------------


@dataclass(frozen=True)
class SchwarzschildParams:
    mass: float

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    @property
    def kappa(self) -> float:
        """Surface gravity ``1/(4m)``."""
        return 1.0 / (4.0 * self.mass)


def radial_operator_coeffs(r, m: float):
    """``p = r^2 (1 - 2m/r)`` and ``w = r^2 / (1 - 2m/r)`` of ``(p u')' + lambda^2 w u = 0``."""
    r = np.asarray(r, dtype=float)
    if m < 0:
        raise ValueError("mass must be >= 0")
    if m > 0 and np.any(r <= 2 * m):
        raise ValueError(f"radius must exceed the horizon 2m = {2 * m}")
    if m == 0 and np.any(r <= 0):
        raise ValueError("radius must be positive")
    f = 1.0 - 2.0 * m / r
    return r**2 * f, r**2 / f


# -- eigenvalues ---------------------------------------------------------------


@dataclass(frozen=True)
class RadialEigenproblem:
    mass: float
    radius: float
    count: int = 10

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("mass must be >= 0")
        if not self.radius > 2 * self.mass:
            raise ValueError(f"outer radius {self.radius} must exceed 2m = {2 * self.mass}")
        if self.count < 1:
            raise ValueError("eigenvalue count must be >= 1")

    @property
    def start(self) -> float:
        return 2 * self.mass + 1e-6 * (self.radius - 2 * self.mass)


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    spacings: np.ndarray
    fit_offset: float
    fit_spacing: float
    residuals: np.ndarray = field(repr=False)


class BracketingError(RuntimeError):
    pass


def _endpoint_values(prob: RadialEigenproblem, lams: np.ndarray, rtol: float = 1e-11) -> np.ndarray:
    """``u(R; lambda)`` for many ``lambda`` in one vectorized integration."""
    lams = np.asarray(lams, dtype=float)
    m, r0 = prob.mass, prob.start
    if m == 0:
        u0 = np.ones_like(lams)
        y0 = -(lams**2) * r0**3 / 3
    else:
        p0, _ = radial_operator_coeffs(r0, m)
        u0 = np.zeros_like(lams)
        y0 = np.full_like(lams, float(p0))
    lam2 = lams**2
    L = len(lams)

    def rhs(r, z):
        p, w = radial_operator_coeffs(r, m)
        u, y = z[:L], z[L:]
        return np.concatenate([y / p, -lam2 * w * u])

    sol = solve_ivp(rhs, (r0, prob.radius), np.concatenate([u0, y0]), method="DOP853", rtol=rtol, atol=1e-14)
    if not sol.success:
        raise RuntimeError(f"radial integration failed: {sol.message}")
    return sol.y[:L, -1]


def solve_radial_eigenvalues(prob: RadialEigenproblem, tol: float = 1e-8, max_scan: float | None = None) -> SpectrumResult:
    """Shooting: scan ``u(R; lambda)`` for sign changes, then bisect each bracket."""
    width = prob.radius - 2 * prob.mass
    step = 0.1 / width
    # the flat spectrum n pi / R bounds the scan comfortably
    limit = max_scan or (prob.count + 2) * math.pi / width * 4
    grid = np.arange(step, limit + step, step)
    vals = _endpoint_values(prob, grid)
    flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(flips) < prob.count:
        raise BracketingError(
            f"found {len(flips)} of {prob.count} eigenvalues scanning up to {limit:.6g} with step {step:.3g}"
        )
    flips = flips[: prob.count]
    lo, hi = grid[flips], grid[flips + 1]
    flo = vals[flips]
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        fm = _endpoint_values(prob, mid)
        same = np.sign(fm) == np.sign(flo)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    lams = 0.5 * (lo + hi)
    n = np.arange(1, len(lams) + 1)
    slope, offset = np.polyfit(n, lams, 1)
    resid = lams - (offset + slope * n)
    return SpectrumResult(lams, np.diff(lams), float(offset), float(slope), resid)


def asymptotic_spectrum(theta: float, m: float, n_range) -> np.ndarray:
    """``lambda_n = theta/(2m) + n pi/(2m)``."""
    if not m > 0:
        raise ValueError("asymptotic spectrum needs m > 0")
    n = np.asarray(list(n_range), dtype=float)
    return theta / (2 * m) + n * math.pi / (2 * m)


def horizon_phase(a: float, b: float) -> float:
    """``theta = arctan(-b/a)`` for the large-r solution ``a sin + b cos``."""
    return math.atan2(-b, a)


# -- Hurwitz zeta --------------------------------------------------------------

_EM_TERMS = 50
_BERNOULLI = bernoulli(12)


def hurwitz_zeta(s, a, terms: int = _EM_TERMS):
    """``sum_{l >= 0} (l + a)^(-s)`` by Euler-Maclaurin; vectorized over ``a``.

    ``terms`` summands are added directly; the tail is the integral, half the
    first omitted term, and Bernoulli corrections through ``B_12``.
    """
    s = complex(s)
    if s == 1:
        raise ValueError("Hurwitz zeta has a pole at s = 1")
    a_arr = np.asarray(a, dtype=complex)
    if np.any(a_arr.real <= 0):
        raise ValueError("Hurwitz zeta needs Re a > 0")
    k = np.arange(terms).reshape((-1,) + (1,) * a_arr.ndim)
    total = np.sum((k + a_arr) ** (-s), axis=0)
    N = terms + a_arr
    total = total + N ** (1 - s) / (s - 1) + 0.5 * N ** (-s)
    rising = s  # s (s+1) ... (s + 2j - 2)
    for j in range(1, 7):
        total = total + _BERNOULLI[2 * j] / math.factorial(2 * j) * rising * N ** (-s - 2 * j + 1)
        rising = rising * (s + 2 * j - 1) * (s + 2 * j)
    if np.isrealobj(a) and s.imag == 0:
        total = total.real
    return total if a_arr.ndim else total[()]


def hurwitz_bruteforce(s, a, terms: int = 10**6):
    """Direct sum of ``terms`` summands plus the integral tail and half the first omitted term."""
    s, a = complex(s), complex(a)
    k = np.arange(terms, dtype=float)
    head = np.sum((k + a) ** (-s))
    N = terms + a
    return head + N ** (1 - s) / (s - 1) + 0.5 * N ** (-s)


@dataclass(frozen=True)
class SpectralZetaSpec:
    s: complex
    xi: float
    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("surface gravity must be positive")

    @property
    def shift(self) -> complex:
        return 1 + 1j * self.kappa * self.xi / (2 * math.pi)


def spectral_zeta(spec: SpectralZetaSpec):
    """``sum_{n >= 1} (n + i kappa xi / 2 pi)^(-s)``."""
    return hurwitz_zeta(spec.s, spec.shift)


def spectral_zeta_on_grid(s, xi, kappa: float) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return hurwitz_zeta(s, 1 + 1j * kappa * xi / (2 * math.pi))


# -- spectral density ----------------------------------------------------------


def spectral_density(s, omega, kappa: float):
    """``(2 pi/kappa)^s omega^(s-1) / (Gamma(s) (exp(2 pi omega/kappa) - 1))``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("frequency omega must be positive")
    if not kappa > 0:
        raise ValueError("surface gravity must be positive")
    out = (2 * math.pi / kappa) ** s * omega ** (s - 1) / (gamma(s) * np.expm1(2 * math.pi * omega / kappa))
    return out if out.ndim else out[()]


def hawking_flux(mass: float, omega):
    """``kappa F`` at ``s = 1`` with ``kappa = 1/(4m)``."""
    params = SchwarzschildParams(mass)
    return params.kappa * spectral_density(1.0, omega, params.kappa)


def planck_reference(mass: float, omega):
    omega = np.asarray(omega, dtype=float)
    out = 2 * math.pi / np.expm1(8 * math.pi * mass * omega)
    return out if out.ndim else out[()]


def density_series(s, omega: float, kappa: float, terms: int = 2000) -> float:
    """Term-by-term transform ``sum_l (2 pi/kappa)^s omega^(s-1) exp(-2 pi (l+1) omega/kappa) / Gamma(s)``."""
    l = np.arange(terms)
    pref = (2 * math.pi / kappa) ** s * omega ** (s - 1) / gamma(s)
    return float(pref * np.sum(np.exp(-2 * math.pi * (l + 1) * omega / kappa)))


def damped_transform(s, omega, kappa: float, cutoff: float, step: float = 0.05) -> np.ndarray:
    """``(1/2 pi) int exp(i omega xi) zeta(xi) exp(-(xi/cutoff)^2) d xi`` by the trapezoid rule."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    half = 6 * cutoff
    xi = np.arange(-half, half + step / 2, step)
    g = spectral_zeta_on_grid(s, xi, kappa) * np.exp(-((xi / cutoff) ** 2))
    phase = np.exp(1j * np.outer(omega, xi))
    vals = (phase * g).sum(axis=1) * step / (2 * math.pi)
    return vals


def validate_transform(s, omega, kappa: float, cutoffs=(50.0, 100.0, 200.0, 400.0)) -> dict:
    """Relative error of the damped transform against the closed form for each cutoff."""
    exact = np.atleast_1d(spectral_density(s, omega, kappa))
    errs = {}
    for c in cutoffs:
        approx = damped_transform(s, omega, kappa, c)
        errs[c] = float(np.max(np.abs(approx - exact) / np.abs(exact)))
    return errs
