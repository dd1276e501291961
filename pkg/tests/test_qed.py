import math
from fractions import Fraction

import numpy as np
import pytest

from psido.parametrix import discrete_laplacian, greens_laplacian, laplacian_kernel_constant
from psido.qed import (
    euclidean_propagator,
    gauge_operator_symbol,
    gauge_symbol,
    identity_residual,
    invert_gauge_symbol,
    random_momentum,
    sweep,
)
from psido.symbols import GridFunction


def random_cases(count, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        alpha = 0.0
        while alpha == 0.0:
            alpha = rng.uniform(-10, 10)
        yield random_momentum(rng, 1e-3, 1e3), alpha


def test_gauge_symbol_examples():
    k = np.array([0.3, -1.0, 2.0, 0.5])
    assert np.allclose(gauge_symbol(k, 1).matrix, (k @ k) * np.eye(4))
    m = gauge_symbol([1, 0, 0, 0], 3).matrix
    assert m[0, 0] == pytest.approx(1 / 3) and m[1, 1] == 1
    assert not gauge_symbol(np.zeros(4), 2).matrix.any()
    assert np.allclose(m, m.T)
    with pytest.raises(ValueError):
        gauge_symbol(k, 0)


def test_inverse_examples():
    inv = invert_gauge_symbol(gauge_symbol([1, 1, 0, 0], 1))
    assert (inv.A, inv.B) == (0.5, 0.0)
    inv = invert_gauge_symbol(gauge_symbol([1, 1, 0, 0], 3))
    assert (inv.A, inv.B) == (0.5, 0.5)
    with pytest.raises(ValueError, match="singular"):
        invert_gauge_symbol(gauge_symbol(np.zeros(4), 2))


def test_inverse_identity_and_direct_inversion():
    for k, alpha in random_cases(100):
        sig = gauge_symbol(k, alpha)
        inv = invert_gauge_symbol(sig)
        assert identity_residual(sig, inv) <= 1e-12
        direct = np.linalg.inv(sig.matrix)
        assert np.allclose(inv.matrix(), direct, rtol=1e-8, atol=0)


def test_transversal_structure():
    for k, alpha in random_cases(20, seed=3):
        inv = invert_gauge_symbol(gauge_symbol(k, alpha))
        k2 = k @ k
        assert np.allclose(inv.matrix() @ k, alpha / k2 * k, rtol=1e-12)
        assert inv.A + inv.B * k2 == pytest.approx(alpha / k2, rel=1e-12)


@pytest.mark.parametrize("alpha", [Fraction(1), Fraction(3), Fraction(-2, 5)])
def test_gauge_symbol_matches_operator_symbol(alpha):
    sym = gauge_operator_symbol(alpha)
    rng = np.random.default_rng(1)
    for _ in range(5):
        k = rng.normal(size=4)
        expect = gauge_symbol(k, float(alpha)).matrix
        got = np.array([[complex(s(np.zeros(4), k)) for s in row] for row in sym])
        assert np.allclose(got, expect, atol=1e-13)


def test_feynman_gauge_is_box_times_metric():
    sym = gauge_operator_symbol(1)
    box = sym[0][0]
    for mu in range(4):
        for nu in range(4):
            assert sym[mu][nu] == (box if mu == nu else 0 * box)


def test_propagator_examples():
    p = euclidean_propagator([1, 0, 0, 0])
    assert np.allclose(p, np.eye(4) / (4 * math.pi**2), rtol=1e-15)
    d = np.array([0.3, -0.2, 0.5, 0.1])
    assert np.allclose(euclidean_propagator(2 * d), euclidean_propagator(d) / 4, rtol=1e-15)
    assert not (euclidean_propagator(d) - np.diag(np.diag(euclidean_propagator(d)))).any()
    with pytest.raises(ValueError):
        euclidean_propagator(np.zeros(4))
    with pytest.raises(ValueError):
        euclidean_propagator(d, alpha=2.0)


def test_propagator_constant_from_fundamental_solution():
    assert euclidean_propagator([0, 0, 0, 1])[0, 0] == pytest.approx(-laplacian_kernel_constant(4), rel=1e-15)


def test_propagator_harmonic_off_origin():
    n = 33
    axes = [np.linspace(1.0, 2.0, n)] + [np.linspace(-0.5, 0.5, n)] * 3
    grids = np.meshgrid(*axes, indexing="ij")
    G = 1 / (4 * math.pi**2 * sum(g**2 for g in grids))
    h = 1.0 / (n - 1)
    lap = discrete_laplacian(G, (h,) * 4)
    one_axis = (G[2:, 1:-1, 1:-1, 1:-1] - 2 * G[1:-1, 1:-1, 1:-1, 1:-1] + G[:-2, 1:-1, 1:-1, 1:-1]) / h**2
    assert np.max(np.abs(lap)) / np.max(np.abs(one_axis)) <= 1e-2
    # and the sampled column agrees with the closed form
    assert euclidean_propagator([grids[0][5, 3, 2, 1], grids[1][5, 3, 2, 1], grids[2][5, 3, 2, 1], grids[3][5, 3, 2, 1]])[2, 2] == pytest.approx(G[5, 3, 2, 1])


def test_four_dimensional_convolution_far_field():
    # a narrow unit source convolved with the n = 4 kernel looks like -mass * propagator
    N = 16

    def source(*xs):
        r2 = sum(x**2 for x in xs) / 0.3**2
        out = np.zeros(np.shape(r2))
        inside = r2 < 1
        out[inside] = np.exp(-1 / (1 - r2[inside]))
        return out

    f = GridFunction.sample(source, (N,) * 4, (2.0,) * 4, (-1.0,) * 4, periodic=False)
    mass = f.values.real.sum() * np.prod(f.spacing)
    u = greens_laplacian(f)
    idx = (N - 1, N // 2, N // 2, N // 2)
    x = f.points()[idx]
    expect = -mass * euclidean_propagator(x)[0, 0]
    assert u.values.real[idx] == pytest.approx(expect, rel=1e-2)


def test_sweep_rows():
    rows = sweep([1.0, 2.5], 10.0, 3, np.random.default_rng(0))
    assert len(rows) == 6
    assert all(r.max_identity_residual <= 1e-12 for r in rows)
    assert rows[0].B == 0.0
    assert len(rows[0].as_list()) == 8
    with pytest.raises(ValueError):
        sweep([1.0], 1e-4, 1, np.random.default_rng(0))
