"""实例生成器"""
import numpy as np
import pytest

from prodsat.examples import (four_qutrit_instance, gen_cycle, gen_pinwheel, pinwheel_wsdr,
                              random_almost_extending_instance, random_instance, singlet_cycle,
                              with_affine_constraints)
from prodsat.exceptions import InvalidInstanceError, SizeLimitError
from prodsat.hypergraph import find_extending_order
from prodsat.models import underlying_hypergraph


@pytest.mark.parametrize("n, vertices", [(1, 3), (2, 7), (5, 63)])
def test_pinwheel_size(n, vertices):
    inst = gen_pinwheel(n, seed=0)
    assert inst.n_qudits == vertices
    assert inst.n_constraints == 2 * vertices
    assert set(inst.dims) == {3}
    assert inst.metadata["n"] == n
    assert len(inst.metadata["spokes"]) == 2


@pytest.mark.parametrize("n", [1, 2, 4])
def test_pinwheel_constant_weight_sdr(n):
    inst = gen_pinwheel(n)
    h = underlying_hypergraph(inst)
    assert pinwheel_wsdr(n).is_valid(h)


def test_pinwheel_limits():
    with pytest.raises(InvalidInstanceError):
        gen_pinwheel(0)
    with pytest.raises(SizeLimitError):
        gen_pinwheel(40)


def test_generators_are_deterministic():
    a, b = gen_pinwheel(2, seed=3), gen_pinwheel(2, seed=3)
    assert all(np.array_equal(x.amps, y.amps) for x, y in zip(a.constraints, b.constraints))
    c = gen_pinwheel(2, seed=4)
    assert not np.array_equal(a.constraints[0].amps, c.constraints[0].amps)


def test_random_amplitudes_are_unit():
    inst = random_instance((2, 3, 4), [(0, 1, 2), (2,)], seed=1)
    for c in inst.constraints:
        assert np.linalg.norm(c.amps) == pytest.approx(1.0)
    assert inst.metadata == {"family": "random", "seed": 1}


def test_cycle_generator():
    inst = gen_cycle([2, 3, 2], 3, seed=0)
    assert inst.dims == (2, 3, 2)
    assert [c.qudits for c in inst.constraints] == [(0, 1), (1, 2), (2, 0)]
    with pytest.raises(InvalidInstanceError):
        gen_cycle(2, 2)
    with pytest.raises(InvalidInstanceError):
        gen_cycle([2, 2], 3)


@pytest.mark.parametrize("n, k", [(5, 2), (7, 3), (9, 4)])
def test_almost_extending_generator(n, k):
    inst = random_almost_extending_instance(n, k, seed=2)
    assert inst.is_qubit_only()
    assert all(c.arity == k for c in inst.constraints)
    assert inst.n_constraints == n - k + 2
    order = find_extending_order(underlying_hypergraph(inst), a_max=1)
    assert order is not None


def test_affine_constraints_only_for_qutrits():
    with pytest.raises(InvalidInstanceError):
        with_affine_constraints(gen_cycle(2, 3), [(0, 0)] * 3)
    with pytest.raises(InvalidInstanceError):
        with_affine_constraints(gen_cycle(3, 3), [(0, 0)] * 2)


def test_fixed_examples():
    assert singlet_cycle(4).n_constraints == 4
    inst = four_qutrit_instance(seed=0)
    assert inst.dims == (3, 3, 3, 3)
    assert inst.n_constraints == 8
