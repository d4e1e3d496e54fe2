"""截断 Chow 环与多重齐次 Bézout 数"""
import itertools

import numpy as np
import pytest
import sympy

from prodsat.bezout import (Equation, MultiHomSystem, TruncatedRingElement, bezout_certificate,
                            bezout_nonzero, bezout_number, chow_product, derived_hypergraph,
                            generic_solution_count, qsat_classes)
from prodsat.examples import four_qutrit_instance, random_instance, two_group_system
from prodsat.exceptions import InvalidInstanceError
from prodsat.hypergraph import HallViolation, WeightedHypergraph, Wsdr, count_wsdr_bruteforce, find_wsdr
from prodsat.workers import set_thread_limit


def sympy_bezout(degrees, group_sizes):
    """直接展开 ∏_i Σ_j d_ij α_j 取 ∏ α_j^{n_j} 的系数"""
    alphas = sympy.symbols(f"a0:{len(group_sizes)}")
    product = sympy.Integer(1)
    for row in degrees:
        product *= sum(d * a for d, a in zip(row, alphas))
    poly = sympy.Poly(sympy.expand(product), *alphas)
    return int(poly.coeff_monomial(sympy.Mul(*[a ** (s - 1) for a, s in zip(alphas, group_sizes)])))


def test_two_group_system_bezout_number():
    system = two_group_system()
    assert system.degrees == [(1, 2), (1, 1), (0, 2)]
    assert bezout_number(system.degrees, system.group_sizes) == 6
    assert bezout_nonzero(system.degrees, system.group_sizes)


def test_four_qutrit_chow_product():
    classes, caps = qsat_classes(four_qutrit_instance())
    assert caps == [2, 2, 2, 2]
    product = chow_product(classes, caps)
    assert product.coeffs == {(2, 2, 2, 2): 864}
    assert generic_solution_count(four_qutrit_instance()) == 864


def test_chow_product_is_order_independent_with_threads():
    classes, caps = qsat_classes(four_qutrit_instance())
    sequential = chow_product(classes, caps)
    set_thread_limit(4)
    assert chow_product(list(reversed(classes)), caps) == sequential


def test_truncation_kills_high_powers():
    h = TruncatedRingElement.linear((1, 0), (1, 1))
    assert (h * h).is_zero()
    assert (h * TruncatedRingElement.linear((0, 3), (1, 1))).top_coefficient() == 3
    with pytest.raises(InvalidInstanceError):
        TruncatedRingElement.linear((1,), (1, 1))
    with pytest.raises(InvalidInstanceError):
        h * TruncatedRingElement.one((2, 2))


def test_wrong_equation_count_gives_zero():
    assert bezout_number([(1, 1)], (2, 3)) == 0
    assert not bezout_nonzero([(1, 1)], (2, 3))


def test_hall_failure_gives_zero_and_certificate():
    # 两个方程都只涉及一维的第一组
    degrees = [(2, 0), (1, 0)]
    assert bezout_number(degrees, (2, 2)) == 0
    certificate = bezout_certificate(degrees, (2, 2))
    assert isinstance(certificate, HallViolation)
    assert certificate.is_valid(derived_hypergraph(degrees, (2, 2)))


@pytest.mark.parametrize("seed", range(8))
def test_nonzero_test_agrees_with_expansion(seed):
    rng = np.random.default_rng(seed)
    group_sizes = tuple(int(s) for s in rng.integers(2, 4, size=3))
    m = sum(s - 1 for s in group_sizes)
    degrees = []
    for _ in range(m):
        row = tuple(int(d) for d in rng.integers(0, 3, size=3) * (rng.random(3) < 0.5))
        if not any(row):
            row = (1, 0, 0)
        degrees.append(row)
    expected = sympy_bezout(degrees, group_sizes)
    assert bezout_number(degrees, group_sizes) == expected
    assert bezout_nonzero(degrees, group_sizes) == (expected != 0)
    certificate = bezout_certificate(degrees, group_sizes)
    assert isinstance(certificate, Wsdr) == (expected != 0)


def test_qsat_count_matches_expansion_for_small_instances():
    for dims, edges in [((2, 2), [(0, 1), (0, 1)]),
                        ((3, 2), [(0, 1), (0,), (0, 1)]),
                        ((2, 2, 2), [(0, 1), (1, 2), (0, 2)])]:
        inst = random_instance(dims, edges, seed=1)
        classes, caps = qsat_classes(inst)
        assert generic_solution_count(inst) == sympy_bezout(classes, [c + 1 for c in caps])


def test_equation_must_be_multihomogeneous():
    bad = Equation({((0, 0, 1),): 1, ((0, 0, 1), (0, 1, 1)): 1})
    with pytest.raises(InvalidInstanceError):
        MultiHomSystem((2,), [bad])


def test_system_file_round_trip(tmp_path):
    system = two_group_system()
    path = str(tmp_path / "system.mhs.json")
    assert system.save_to_file(path)
    loaded = MultiHomSystem.load_from_file(path)
    assert loaded.group_sizes == system.group_sizes
    assert loaded.degrees == system.degrees
    y = [np.array([0.3, 0.7j]), np.array([1, -2, 0.5])]
    assert np.allclose(loaded.evaluate(y), system.evaluate(y))


def test_bezout_for_all_qubit_triangle():
    inst = random_instance((2, 2, 2), [(0, 1), (1, 2), (0, 2)], seed=0)
    classes, caps = qsat_classes(inst)
    assert chow_product(classes, caps).top_coefficient() == 2
    assert list(itertools.chain.from_iterable(classes)).count(1) == 6


def random_weighted_hypergraph(seed):
    """≤ 6 个顶点、权重 ≤ 3、边数 m = Σw ≤ 8 的随机超图"""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    weights = [int(w) for w in rng.integers(0, 4, size=n)]
    while sum(weights) > 8:
        positive = [v for v, w in enumerate(weights) if w > 0]
        weights[int(rng.choice(positive))] -= 1
    if sum(weights) == 0:
        weights[0] = 1
    edges = []
    for _ in range(sum(weights)):
        size = int(rng.integers(1, min(3, n) + 1))
        edges.append(tuple(int(v) for v in rng.choice(n, size=size, replace=False)))
    return WeightedHypergraph(tuple(weights), tuple(edges))


@pytest.mark.parametrize("seed", range(50))
def test_wsdr_count_equals_bezout_number(seed):
    h = random_weighted_hypergraph(seed)
    degrees = [tuple(int(v in edge) for v in range(h.n_vertices)) for edge in h.edges]
    group_sizes = [w + 1 for w in h.vertex_weights]
    count = count_wsdr_bruteforce(h)
    assert count == bezout_number(degrees, group_sizes)
    result = find_wsdr(h)
    assert isinstance(result, Wsdr) == (count > 0)
    assert result.is_valid(h)
    assert bezout_nonzero(degrees, group_sizes) == (count > 0)
