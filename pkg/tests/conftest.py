import random
from fractions import Fraction

import pytest

from psido.exact import GaussianRational, multi_indices
from psido.symbols import DiffOperator, PolySymbol


def random_x_poly(rng: random.Random, n: int, degree: int) -> PolySymbol:
    terms = {}
    for xe in multi_indices(n, degree):
        if rng.random() < 0.5:
            c = GaussianRational(Fraction(rng.randint(-5, 5), rng.randint(1, 4)), Fraction(rng.randint(-2, 2), rng.randint(1, 3)))
            terms[(tuple(xe), (0,) * n)] = c
    return PolySymbol(n, terms)


def random_operator(rng: random.Random, n: int, order: int = 3, coeff_degree: int = 2) -> DiffOperator:
    terms = {}
    for alpha in multi_indices(n, order):
        if rng.random() < 0.6:
            terms[tuple(alpha)] = random_x_poly(rng, n, coeff_degree)
    return DiffOperator(n, terms)


@pytest.fixture
def rng():
    return random.Random(12345)
