import numpy as np
import pytest
from hypothesis import given, strategies as st

from topobound.poly import Polynomial, design_matrix, determinant, monomial_exponents

coef = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
terms = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), coef, max_size=6)
point = st.tuples(st.floats(-2, 2), st.floats(-2, 2))


def test_basic_arithmetic():
    x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    p = (x + y) ** 2 - x * x - y * y
    assert p == 2 * x * y
    assert p.degree == 2
    assert (p - p).is_zero()
    assert Polynomial.constant(2, 0.0).degree == 0


def test_linear_and_to_list_roundtrip():
    p = Polynomial.linear([1.0, -2.0, 0.5], const=3.0)
    q = Polynomial.from_list(3, p.to_list())
    assert p == q
    assert p(np.array([[1.0, 1.0, 2.0]]))[0] == pytest.approx(3.0)


def test_exponent_length_checked():
    with pytest.raises(ValueError):
        Polynomial(2, {(1, 0, 0): 1.0})


def test_monomial_count_and_nesting():
    for n in (1, 2, 3):
        for d in range(5):
            E = monomial_exponents(n, d)
            from math import comb
            assert len(E) == comb(n + d, d)
            assert E[: len(monomial_exponents(n, d - 1))] == monomial_exponents(n, d - 1) if d else True


def test_design_matrix_matches_evaluation(rng):
    X = rng.normal(size=(7, 2))
    E = monomial_exponents(2, 3)
    A = design_matrix(X, E)
    c = rng.normal(size=len(E))
    p = Polynomial(2, dict(zip(E, c)))
    assert np.allclose(A @ c, p(X))


def test_determinant_2x2():
    x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    d = determinant([[x, y], [y, x]])
    assert d == x * x - y * y


@given(terms, terms, point)
def test_product_evaluates_pointwise(a, b, pt):
    p, q = Polynomial(2, a), Polynomial(2, b)
    X = np.array([pt])
    assert np.allclose((p * q)(X), p(X) * q(X), rtol=1e-9, atol=1e-9)


@given(terms, point)
def test_gradient_matches_central_difference(a, pt):
    p = Polynomial(2, a)
    X = np.array([pt])
    h = 1e-6
    g = p.gradient(X)[0]
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (p(X + e) - p(X - e))[0] / (2 * h)
        assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-5)
