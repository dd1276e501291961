import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from psido.hawking import (
    BracketingError,
    RadialEigenproblem,
    SchwarzschildParams,
    SpectralZetaSpec,
    asymptotic_spectrum,
    density_series,
    hawking_flux,
    horizon_phase,
    hurwitz_bruteforce,
    hurwitz_zeta,
    planck_reference,
    radial_operator_coeffs,
    solve_radial_eigenvalues,
    spectral_density,
    spectral_zeta,
    validate_transform,
)


def test_surface_gravity():
    p = SchwarzschildParams(0.7)
    assert p.kappa * 4 * p.mass == 1
    with pytest.raises(ValueError):
        SchwarzschildParams(0.0)


# -- radial problem ------------------------------------------------------------


def test_radial_coefficients():
    p, w = radial_operator_coeffs(4.0, 1.0)
    assert (p, w) == (8.0, 32.0)
    r = np.array([0.5, 2.0])
    p, w = radial_operator_coeffs(r, 0.0)
    assert np.array_equal(p, r**2) and np.array_equal(w, r**2)
    p, w = radial_operator_coeffs(1e8, 1.0)
    assert p / 1e16 == pytest.approx(1) and w / 1e16 == pytest.approx(1)
    assert radial_operator_coeffs(2.0 + 1e-12, 1.0)[0] == pytest.approx(0, abs=1e-11)
    with pytest.raises(ValueError, match="horizon"):
        radial_operator_coeffs(2.0, 1.0)


@pytest.mark.parametrize("R", [1.0, math.pi, 10.0])
def test_flat_spectrum(R):
    res = solve_radial_eigenvalues(RadialEigenproblem(0.0, R, 10))
    assert np.max(np.abs(res.eigenvalues - np.arange(1, 11) * math.pi / R)) <= 1e-6
    assert np.all(np.diff(res.eigenvalues) > 0)


def test_horizon_spectrum_is_increasing_and_reported():
    res = solve_radial_eigenvalues(RadialEigenproblem(1.0, 30.0, 4))
    assert len(res.eigenvalues) == 4
    assert np.all(res.spacings > 0)
    assert math.isfinite(res.fit_spacing)


def test_bracketing_failure_message():
    with pytest.raises(BracketingError, match="found .* of 10 eigenvalues"):
        solve_radial_eigenvalues(RadialEigenproblem(0.0, 1.0, 10), max_scan=5.0)


def test_problem_validation():
    with pytest.raises(ValueError):
        RadialEigenproblem(1.0, 1.5)
    with pytest.raises(ValueError):
        RadialEigenproblem(0.0, 1.0, 0)


def test_asymptotic_spectrum():
    assert np.allclose(asymptotic_spectrum(0.0, 0.5, range(1, 4)), [math.pi, 2 * math.pi, 3 * math.pi])
    lam = asymptotic_spectrum(0.0, 3.0, range(1, 6))
    assert np.allclose(np.diff(lam), math.pi / 6)
    with pytest.raises(ValueError):
        asymptotic_spectrum(0.0, 0.0, range(3))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5), st.floats(-5, 5), st.floats(0.1, 3))
def test_horizon_tan_condition(a, b, m):
    theta = horizon_phase(a, b)
    for lam in asymptotic_spectrum(theta, m, range(1, 5)):
        assert math.tan(2 * m * lam) == pytest.approx(-b / a, rel=1e-9, abs=1e-9)


# -- Hurwitz zeta --------------------------------------------------------------


def test_hurwitz_riemann_values():
    assert hurwitz_zeta(2, 1) == pytest.approx(math.pi**2 / 6, rel=1e-14)
    direct = math.fsum(n**-3.0 for n in range(1, 200001)) + 1 / (2 * 200000.0**2)
    assert hurwitz_zeta(3, 1) == pytest.approx(direct, rel=1e-10)


@pytest.mark.parametrize("s", [2, 3])
@pytest.mark.parametrize("a", [1, 1 + 1j, 1 + 2j])
def test_hurwitz_matches_bruteforce_and_mpmath(s, a):
    h = hurwitz_zeta(s, a)
    ref = hurwitz_bruteforce(s, a)
    assert abs(h - ref) / abs(ref) <= 1e-10
    mp = complex(mpmath.zeta(s, a))
    assert abs(h - mp) / abs(mp) <= 1e-12


def test_hurwitz_plain_truncation_at_large_shift():
    # a million plain terms without any tail correction, compared loosely
    a = 1 + 1j
    k = np.arange(10**6)
    plain = np.sum((k + a) ** -2.0)
    assert abs(hurwitz_zeta(2, a) - plain) <= 2e-6


@settings(max_examples=40, deadline=None)
@given(st.floats(1.5, 6), st.floats(0.2, 5), st.floats(-50, 50))
def test_hurwitz_conjugation_symmetry(s, re, im):
    a = complex(re, im)
    assert abs(hurwitz_zeta(s, a.conjugate()) - np.conj(hurwitz_zeta(s, a))) <= 1e-12 * max(1, abs(hurwitz_zeta(s, a)))


def test_hurwitz_vectorized():
    a = np.array([1, 1 + 1j, 2 - 3j])
    v = hurwitz_zeta(2.5, a)
    assert v.shape == (3,)
    assert all(abs(v[i] - hurwitz_zeta(2.5, a[i])) < 1e-15 for i in range(3))


def test_hurwitz_errors():
    with pytest.raises(ValueError, match="pole"):
        hurwitz_zeta(1, 2)
    with pytest.raises(ValueError, match="Re a"):
        hurwitz_zeta(2, -1 + 1j)


# -- spectral zeta -------------------------------------------------------------


def test_spectral_zeta_reductions():
    assert spectral_zeta(SpectralZetaSpec(3, 0.0, 0.7)) == pytest.approx(hurwitz_zeta(3, 1))
    assert spectral_zeta(SpectralZetaSpec(2, 1.0, 2 * math.pi)) == pytest.approx(hurwitz_zeta(2, 1 + 1j), rel=1e-15)


def test_relabelling_identity():
    s, c = 2.5, 0.3j
    left = sum((n + c) ** -s for n in range(1, 51))
    right = sum((l + 1 + c) ** -s for l in range(50))
    assert left == right


# -- spectral density ----------------------------------------------------------


def test_planck_identity():
    for m in (0.25, 1.0, 3.0):
        for omega in (0.01, 0.1, 1.0, 2.5):
            kappa = 1 / (4 * m)
            assert kappa * spectral_density(1, omega, kappa) == pytest.approx(planck_reference(m, omega), rel=1e-14)
            assert spectral_density(1, omega, kappa) == pytest.approx(8 * math.pi * m / math.expm1(8 * math.pi * m * omega), rel=1e-14)
    assert hawking_flux(1.0, 1.0) == pytest.approx(2 * math.pi / math.expm1(8 * math.pi), rel=1e-14)


def test_geometric_series_oracle():
    assert spectral_density(2, 1.0, 2 * math.pi) == pytest.approx(density_series(2, 1.0, 2 * math.pi), rel=1e-10)
    assert spectral_density(3.5, 0.7, 1.3) == pytest.approx(density_series(3.5, 0.7, 1.3), rel=1e-10)


def test_density_decreasing_at_s_one():
    omega = np.linspace(0.05, 5, 200)
    assert np.all(np.diff(spectral_density(1, omega, 0.25)) < 0)


def test_density_errors():
    with pytest.raises(ValueError):
        spectral_density(1, 0.0, 1.0)
    with pytest.raises(ValueError):
        spectral_density(1, 1.0, -1.0)


@pytest.mark.parametrize("s", [2, 3])
def test_fourier_convention(s):
    errs = validate_transform(s, np.linspace(0.5, 3.0, 6), 2 * math.pi)
    values = list(errs.values())
    assert values[-1] <= 1e-3
    # damping error shrinks as the cutoff grows
    assert all(b < a for a, b in zip(values, values[1:]))
