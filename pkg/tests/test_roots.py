"""单变量求根"""
import numpy as np
import pytest
import sympy

from prodsat.exceptions import DegeneratePolynomialError, SizeLimitError
from prodsat.roots import UnivariatePoly, companion_roots, roots_univariate


def assert_same_roots(found, expected, tol):
    found, expected = list(found), list(expected)
    assert len(found) == len(expected)
    for z in expected:
        distances = [abs(z - w) for w in found]
        k = int(np.argmin(distances))
        assert distances[k] < tol
        found.pop(k)


@pytest.mark.parametrize("degree", [2, 5, 12, 30])
def test_aberth_agrees_with_companion_matrix(rng, degree):
    coeffs = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    poly = UnivariatePoly(coeffs)
    assert_same_roots(roots_univariate(poly), companion_roots(poly), 1e-8)


def test_cubic_against_sympy():
    x = sympy.symbols("x")
    expected = [complex(r) for r in sympy.Poly(x ** 3 - 4 * x + 5, x).nroots(n=30)]
    assert_same_roots(roots_univariate(UnivariatePoly([5, -4, 0, 1])), expected, 1e-12)


def test_roots_are_sorted():
    roots = roots_univariate(UnivariatePoly([6, -5, 1]))
    assert np.allclose(roots, [2, 3])


def test_zero_roots_are_split_off():
    roots = roots_univariate(UnivariatePoly([0, 0, -3, 1]))
    assert np.allclose(roots, [0, 0, 3])


def test_double_root_is_found():
    # (x - 1)^2 (x + 2)
    roots = roots_univariate(UnivariatePoly([2, -3, 0, 1]))
    assert_same_roots(roots, [-2, 1, 1], 1e-5)


def test_linear_polynomial():
    assert np.allclose(roots_univariate(UnivariatePoly([3j, 1])), [-3j])


def test_leading_zeros_are_trimmed():
    poly = UnivariatePoly([1, 2, 1e-20])
    assert poly.degree == 1
    assert UnivariatePoly([0]).degree == -1


def test_constant_polynomial_is_rejected():
    with pytest.raises(DegeneratePolynomialError):
        roots_univariate(UnivariatePoly([4]))
    with pytest.raises(DegeneratePolynomialError):
        companion_roots(UnivariatePoly([0, 0]))


def test_degree_cap():
    with pytest.raises(SizeLimitError):
        UnivariatePoly(np.ones(20), degree_cap=10)
