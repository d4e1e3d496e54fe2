"""传递函数与小工具约束"""
import numpy as np
import pytest
from numpy.polynomial import Polynomial

from prodsat.exceptions import DimensionMismatchError, InvalidInstanceError
from prodsat.models import contract_constraint, proportionality_residual
from prodsat.transfer import (equality_gadget, forced_assignment, gadget_linear, gadget_quadratic,
                              product_gadget, singlet_coefficients, transfer, transfer_polynomial)


def cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_forced_value_satisfies_constraint(rng, k):
    phi = cvec(rng, 2 ** k)
    partial = [cvec(rng, 2) for _ in range(k - 1)]
    result = transfer(phi, partial)
    assert not result.vanished
    overlap = contract_constraint(phi.reshape((2,) * k), partial + [result.g])
    assert abs(overlap) <= 1e-12 * np.linalg.norm(phi) * np.prod([np.linalg.norm(v) for v in partial]) * 4


def test_forced_assignment_on_middle_slot(rng):
    tensor = cvec(rng, 8).reshape(2, 2, 2)
    a, b = cvec(rng, 2), cvec(rng, 2)
    g = forced_assignment(tensor, [a, None, b]).g
    assert abs(contract_constraint(tensor, [a, g, b])) < 1e-12


def test_vanishing_transfer_is_flagged():
    result = transfer([1, 0, 0, 0], [np.array([0, 1])])
    assert result.vanished
    assert np.allclose(result.xbar, 0)


def test_transfer_rejects_bad_shapes():
    with pytest.raises(DimensionMismatchError):
        transfer([1, 0], [])
    with pytest.raises(DimensionMismatchError):
        transfer([1, 0, 0], [np.array([1, 0])])
    with pytest.raises(InvalidInstanceError):
        forced_assignment(np.zeros((2, 2)), [None, None])


def test_equality_gadget_copies_input(rng):
    v = cvec(rng, 2)
    g = transfer(equality_gadget(), [v]).g
    assert proportionality_residual(g, v) < 1e-12


def test_product_gadget_multiplies_coordinates(rng):
    v1, v2 = cvec(rng, 2), cvec(rng, 2)
    g = transfer(product_gadget(), [v1, v2]).g
    assert proportionality_residual(g, np.array([v1[0] * v2[0], v1[1] * v2[1]])) < 1e-12


def test_linear_gadget_formula(rng):
    a, b, v = cvec(rng, 2), cvec(rng, 2), cvec(rng, 2)
    g = transfer(gadget_linear(a, b), [v]).g
    expected = np.array([b[0] * v[0] + b[1] * v[1], -(a[0] * v[0] + a[1] * v[1])])
    assert proportionality_residual(g, expected) < 1e-12


def test_quadratic_gadget_formula(rng):
    a, b = cvec(rng, 4), cvec(rng, 4)
    v1, v2 = cvec(rng, 2), cvec(rng, 2)
    g = transfer(gadget_quadratic(a, b), [v1, v2]).g
    products = np.kron(v1, v2)
    expected = np.array([b @ products, -(a @ products)])
    assert proportionality_residual(g, expected) < 1e-12


def test_gadgets_reject_zero_input():
    with pytest.raises(InvalidInstanceError):
        gadget_linear((0, 0), (0, 0))
    with pytest.raises(InvalidInstanceError):
        gadget_quadratic((0,) * 4, (0,) * 4)


def test_singlet_accepts_proportional_pairs(rng):
    s = singlet_coefficients().reshape(2, 2)
    v = cvec(rng, 2)
    assert abs(contract_constraint(s, [v, (2 - 1j) * v])) < 1e-12
    assert abs(contract_constraint(s, [np.array([1, 0]), np.array([0, 1])])) > 0.5


def test_polynomial_transfer_of_product_gadget():
    x = (Polynomial([0, 1]), Polynomial([1]))
    top, bottom = transfer_polynomial(product_gadget().reshape(2, 2, 2), [x, x, None])
    for point in (2.0, -0.5, 3.0):
        assert top(point) / bottom(point) == pytest.approx(point ** 2)


def unit(v):
    return v / np.linalg.norm(v)


@pytest.mark.parametrize("k", [2, 3])
def test_transfer_is_orthogonal_over_many_draws(k):
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        phi = unit(cvec(rng, 2 ** k))
        partial = [unit(cvec(rng, 2)) for _ in range(k - 1)]
        result = transfer(phi, partial)
        overlap = contract_constraint(phi.reshape((2,) * k), partial + [result.g])
        assert abs(overlap) <= 1e-12, seed


@pytest.mark.parametrize("k", [2, 3])
def test_transfer_is_multilinear(rng, k):
    phi, psi = cvec(rng, 2 ** k), cvec(rng, 2 ** k)
    partial = [cvec(rng, 2) for _ in range(k - 1)]
    a, b = 0.7 - 1.3j, -2.1 + 0.4j
    combined = transfer(a * phi + b * psi, partial).g
    assert np.allclose(combined, a * transfer(phi, partial).g + b * transfer(psi, partial).g)
    for slot in range(k - 1):
        u, w = cvec(rng, 2), cvec(rng, 2)
        left = [u if s == slot else v for s, v in enumerate(partial)]
        right = [w if s == slot else v for s, v in enumerate(partial)]
        mixed = [a * u + b * w if s == slot else v for s, v in enumerate(partial)]
        assert np.allclose(transfer(phi, mixed).g,
                           a * transfer(phi, left).g + b * transfer(phi, right).g)
