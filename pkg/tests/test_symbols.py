import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from psido.exact import GaussianRational, MultiIndex, multi_indices
from psido.symbols import (
    DiffOperator,
    GridFunction,
    PolySymbol,
    apply_symbol,
    compose_symbols,
    estimate_symbol_class,
    is_exact_composition,
    leading_symbol,
    op_to_symbol,
    symbol_to_op,
)

from conftest import random_operator

I = GaussianRational(0, 1)


def xi(n, i):
    return PolySymbol.xi(n, i)


def x(n, i):
    return PolySymbol.x(n, i)


# -- multi-indices -----------------------------------------------------------


def test_multi_index_order_and_grlex():
    a = MultiIndex((2, 0, 1))
    assert a.order == 3
    assert a.factorial() == 2
    assert MultiIndex((0, 2)) < MultiIndex((1, 1, )) or MultiIndex((1, 1)) < MultiIndex((0, 2))
    assert MultiIndex((3, 0)) > MultiIndex((0, 2))
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=2, max_size=8, unique=True))
def test_grlex_is_strict_total_order(items):
    ms = [MultiIndex(t) for t in items]
    for a in ms:
        for b in ms:
            assert (a < b) + (b < a) + (tuple(a) == tuple(b)) == 1


def test_multi_indices_enumeration():
    got = list(multi_indices(2, 2))
    assert len(got) == 6
    assert [m.order for m in got] == sorted(m.order for m in got)


# -- op_to_symbol --------------------------------------------------------------


def test_laplacian_symbol_is_minus_xi_squared():
    sigma = op_to_symbol(DiffOperator.laplacian(3))
    assert sigma == -PolySymbol.xi_norm_squared(3)


def test_identity_symbol():
    assert op_to_symbol(DiffOperator.identity(2)) == 1


def test_x_times_D():
    P = DiffOperator(1, {(1,): x(1, 0)})
    assert op_to_symbol(P) == x(1, 0) * xi(1, 0)
    # hand oracle: exp(-i xi x) x D exp(i xi x) = x xi
    assert P.conjugate_plane_wave() == x(1, 0) * xi(1, 0)


def test_plane_wave_conjugation_matches_symbol(rng):
    for _ in range(20):
        n = rng.randint(1, 2)
        P = random_operator(rng, n)
        assert P.conjugate_plane_wave() == op_to_symbol(P)


def test_round_trip(rng):
    for _ in range(30):
        P = random_operator(rng, rng.randint(1, 2))
        assert symbol_to_op(op_to_symbol(P)) == P


def test_partial_derivative_operator():
    # d/dx = i D, so its symbol is i xi
    assert op_to_symbol(DiffOperator.partial(1, (1,))) == xi(1, 0) * I


# -- leading symbol ----------------------------------------------------------


def test_leading_symbol_examples():
    sigma = -PolySymbol.xi_norm_squared(2) + x(2, 0) * xi(2, 0) + 5
    assert leading_symbol(sigma) == -PolySymbol.xi_norm_squared(2)
    assert leading_symbol(xi(2, 0) * xi(2, 1) + xi(2, 0)) == xi(2, 0) * xi(2, 1)
    with pytest.raises(ValueError, match="empty symbol"):
        leading_symbol(PolySymbol(2))


# -- composition -------------------------------------------------------------


def test_compose_xi_with_x():
    # operator oracle: D(x f) = -i f - i x f' = (x D - i) f
    out = compose_symbols(xi(1, 0), x(1, 0), 1)
    assert out == x(1, 0) * xi(1, 0) - I
    assert is_exact_composition(xi(1, 0), 1)
    A = DiffOperator(1, {(1,): 1})
    B = DiffOperator(1, {(0,): x(1, 0)})
    assert op_to_symbol(A @ B) == out


def test_compose_constant():
    b = x(2, 0) ** 2 * xi(2, 1) + 3
    assert compose_symbols(PolySymbol.constant(2, 7), b, 3) == b * 7


def test_compose_laplacians():
    lap = -PolySymbol.xi_norm_squared(2)
    assert compose_symbols(lap, lap, 2) == PolySymbol.xi_norm_squared(2) ** 2


def test_compose_dimension_mismatch():
    with pytest.raises(ValueError):
        compose_symbols(xi(1, 0), xi(2, 0), 1)


def test_composition_matches_operator_product(rng):
    for _ in range(40):
        n = rng.randint(1, 2)
        A, B = random_operator(rng, n), random_operator(rng, n)
        sa, sb = op_to_symbol(A), op_to_symbol(B)
        expected = op_to_symbol(A @ B)
        assert compose_symbols(sa, sb, max(A.order, 0)) == expected
        # independent path: conjugate plane waves through B then A
        assert A.conjugate_plane_wave(B.conjugate_plane_wave()) == expected


def test_leading_symbol_multiplicative_and_order_additive(rng):
    for _ in range(30):
        n = rng.randint(1, 2)
        A, B = random_operator(rng, n), random_operator(rng, n)
        sa, sb = op_to_symbol(A), op_to_symbol(B)
        if sa.is_zero() or sb.is_zero():
            continue
        c = compose_symbols(sa, sb, max(A.order, 0))
        assert c.degree <= sa.degree + sb.degree
        prod = leading_symbol(sa) * leading_symbol(sb)
        if not prod.is_zero():
            assert leading_symbol(c) == prod


# -- serialization -----------------------------------------------------------


def test_json_round_trip_bit_exact(rng):
    P = random_operator(rng, 2)
    s = op_to_symbol(P)
    text = s.dumps()
    data = json.loads(text)
    assert set(data) == {"n", "terms"}
    assert all("/" in t["re"] and "/" in t["im"] for t in data["terms"])
    again = PolySymbol.loads(text)
    assert again == s
    assert again.dumps() == text


# -- grid application --------------------------------------------------------


def test_apply_identity():
    f = GridFunction.sample(lambda t: np.exp(np.sin(t)), (32,), (2 * np.pi,))
    out = apply_symbol(PolySymbol.constant(1), f)
    assert np.allclose(out.values, f.values, atol=1e-13)


def test_apply_i_xi_is_derivative():
    # D = -i d/dx has symbol xi, so i xi is d/dx
    f = GridFunction.sample(np.sin, (64,), (2 * np.pi,))
    out = apply_symbol(xi(1, 0) * I, f)
    t = f.axes()[0]
    assert np.max(np.abs(out.values - np.cos(t))) < 1e-12


def test_apply_laplacian_plane_wave():
    f = GridFunction.sample(lambda t: np.exp(3j * t), (32,), (2 * np.pi,))
    out = apply_symbol(-PolySymbol.xi_norm_squared(1), f)
    assert np.max(np.abs(out.values + 9 * f.values)) < 1e-11


def test_plane_wave_eigenrelation_2d():
    sigma = xi(2, 0) ** 2 * 3 - xi(2, 1) * I + 2
    f = GridFunction.sample(lambda a, b: np.exp(1j * (2 * a - 5 * b)), (16, 32), (2 * np.pi, 2 * np.pi))
    out = apply_symbol(sigma, f)
    expect = complex(sigma(np.zeros(2), np.array([2.0, -5.0]))) * f.values
    assert np.max(np.abs(out.values - expect)) < 1e-10


def test_apply_x_dependent_symbol():
    # x * d/dx applied to sin on a 2 pi box
    f = GridFunction.sample(np.sin, (64,), (2 * np.pi,))
    out = apply_symbol(x(1, 0) * xi(1, 0) * I, f)
    t = f.axes()[0]
    assert np.max(np.abs(out.values - t * np.cos(t))) < 1e-11


def test_apply_symbol_errors():
    with pytest.raises(ValueError, match="power"):
        GridFunction(np.zeros(12), (1.0,))
    f = GridFunction(np.zeros(8), (1.0,))
    with pytest.raises(ValueError, match="dimension"):
        apply_symbol(xi(2, 0), f)


# -- symbol class ------------------------------------------------------------


def test_class_of_xi_squared():
    est = estimate_symbol_class(PolySymbol.xi_norm_squared(2), 1.0, (1, 1), (2, 2))
    assert abs(est.omega - 2) <= 0.1
    # x-derivatives vanish identically for an x-independent symbol
    assert all(j.order == 0 for j, _ in est.exponents)


def test_class_of_constant():
    est = estimate_symbol_class(PolySymbol.constant(1), 1.0, (1,), (1,))
    assert abs(est.omega) <= 0.1


def test_class_of_inverse_laplacian_with_cutoff():
    from psido.parametrix import CutoffSpec

    chi = CutoffSpec(1.0, 2.0)

    def sigma(x, xi):
        r2 = np.sum(xi**2, axis=-1)
        return chi(xi) / r2

    est = estimate_symbol_class(sigma, 1.0, (0, 0), (2, 2))
    assert abs(est.omega + 2) <= 0.1


def test_class_rho_range():
    with pytest.raises(ValueError):
        estimate_symbol_class(PolySymbol.constant(1), 0.4, (0,), (0,))


def test_class_nonfinite():
    with pytest.raises(ValueError, match="non-finite"):
        estimate_symbol_class(lambda x, xi: np.full(xi.shape[:-1], np.nan), 1.0, (0,), (0,))
