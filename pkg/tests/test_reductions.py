"""qudit 拆分、解的搬运与方程组编译"""
import numpy as np
import pytest

from prodsat.bezout import Equation, MultiHomSystem
from prodsat.examples import qutrit_qubit_instance, random_instance, two_group_system
from prodsat.exceptions import InvalidInstanceError, RefusedError
from prodsat.hypergraph import HallViolation, find_wsdr
from prodsat.models import (ProductState, QsatInstance, constraint_energies, contract_constraint,
                            proportionality_residual, underlying_hypergraph)
from prodsat.reductions import (SplitMapChain, antisymmetric_excess, extract_mhs_solution, f_map,
                                f_preimage, mhs_to_prodsat, reduce_to_qubits, split_matrix,
                                split_qudit, transport_solution, transport_wsdr)
from prodsat.transfer import forced_assignment


def cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def test_f_map_small_case():
    assert np.allclose(f_map([1, 2], [3, 5]), [3, 10, -1])
    assert np.allclose(f_map([1, 0], [1, 0, 0]), [1, 0, 0, 0])


def test_f_map_rejects_zero_inputs():
    with pytest.raises(InvalidInstanceError):
        f_map([0, 0], [1, 2])
    with pytest.raises(InvalidInstanceError):
        f_map([1, 0], [0, 0])


@pytest.mark.parametrize("d", [2, 3, 5])
def test_split_matrix_matches_f_map(rng, d):
    x, y = cvec(rng, 2), cvec(rng, d)
    assert np.allclose(np.einsum('jab,a,b->j', split_matrix(d), x, y), f_map(x, y))


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_preimage_reproduces_direction(rng, d):
    z = cvec(rng, d + 1)
    x, y = f_preimage(z)
    assert proportionality_residual(f_map(x, y), z) < 1e-8


def test_preimage_with_vanishing_first_component():
    z = np.array([0, 1, 2, 3], dtype=complex)
    x, y = f_preimage(z)
    assert np.allclose(x, [0, 1])
    assert proportionality_residual(f_map(x, y), z) < 1e-12


def test_split_of_qutrit_qubit_constraint():
    inst = qutrit_qubit_instance(seed=2)
    C = inst.constraints[0].tensor(inst.dims)
    split, step = split_qudit(inst, 0)
    assert split.dims == (2, 2, 2)
    assert step.new == (2, 0)
    c = split.constraints[0]
    assert c.qudits == (2, 0, 1)
    expected = [C[0, 0], C[0, 1], C[2, 0], C[2, 1], -C[2, 0], -C[2, 1], C[1, 0], C[1, 1]]
    assert proportionality_residual(c.coefficients, np.array(expected)) < 1e-12


def test_split_rejects_qubits():
    inst = qutrit_qubit_instance()
    with pytest.raises(InvalidInstanceError):
        split_qudit(inst, 1)
    with pytest.raises(InvalidInstanceError):
        split_qudit(inst, 7)


def test_split_overlap_factorizes(rng):
    inst = random_instance((4, 2), [(1, 0)], seed=8)
    split, _ = split_qudit(inst, 0)
    C, S = inst.constraints[0].tensor(inst.dims), split.constraints[0].tensor(split.dims)
    ratios = []
    for _ in range(3):
        x, y, w = cvec(rng, 2), cvec(rng, 3), cvec(rng, 2)
        ratios.append(contract_constraint(S, [w, x, y]) / contract_constraint(C, [w, f_map(x, y)]))
    assert np.allclose(ratios, ratios[0])


def test_reduce_to_qubits_chain(rng):
    inst = random_instance((3, 2, 4), [(0, 1), (1, 2), (0, 2)], seed=4)
    reduced, chain = reduce_to_qubits(inst)
    assert reduced.is_qubit_only()
    assert reduced.n_qudits == 1 + 1 + 2 + 1 + 1
    assert len(chain) == 3
    assert chain.final_dims() == reduced.dims
    assert sorted(chain.qubits_of(2)) == sorted(set(chain.qubits_of(2)))
    assert len(chain.qubits_of(2)) == 3

    original = ProductState([cvec(rng, d) for d in inst.dims])
    lifted = transport_solution(chain, original, "lift")
    lifted.check_dims(reduced.dims)
    pushed = transport_solution(chain, lifted, "push")
    for a, b in zip(pushed.locals, original.locals):
        assert proportionality_residual(a, b) < 1e-8


def test_zero_energy_survives_push(rng):
    # 拆分后实例上直接强制出的零能量态
    inst = random_instance((3, 2), [(0, 1)], seed=6)
    reduced, chain = reduce_to_qubits(inst)
    c = reduced.constraints[0]
    values = {q: cvec(rng, 2) for q in c.qudits[1:]}
    slots = [None] + [values[q] for q in c.qudits[1:]]
    values[c.qudits[0]] = forced_assignment(c.tensor(reduced.dims), slots).g
    state = ProductState([values[q] for q in range(reduced.n_qudits)])
    assert constraint_energies(reduced, state).max() < 1e-24
    pushed = transport_solution(chain, state, "push")
    assert constraint_energies(inst, pushed).max() < 1e-24


def test_transport_wsdr_stays_valid():
    inst = random_instance((3, 3), [(0, 1)] * 4, seed=1)
    wsdr = find_wsdr(underlying_hypergraph(inst))
    reduced, chain = reduce_to_qubits(inst)
    moved = transport_wsdr(chain, wsdr)
    assert moved.is_valid(underlying_hypergraph(reduced))


def test_transport_direction_is_checked(rng):
    _, chain = reduce_to_qubits(qutrit_qubit_instance())
    with pytest.raises(InvalidInstanceError):
        transport_solution(chain, ProductState([cvec(rng, 3), cvec(rng, 2)]), "sideways")


def test_chain_file_round_trip(tmp_path):
    _, chain = reduce_to_qubits(random_instance((4, 3), [(0, 1)], seed=0))
    path = str(tmp_path / "out.json.splits.json")
    assert chain.save_to_file(path)
    loaded = SplitMapChain.load_from_file(path)
    assert loaded.source_dims == chain.source_dims
    assert loaded.steps == chain.steps


def test_chain_from_splits_only():
    _, chain = reduce_to_qubits(random_instance((4, 2, 3), [(0, 1, 2)], seed=0))
    data = chain.to_dict()
    del data["source_dims"]
    assert SplitMapChain.from_dict(data).source_dims == (4, 2, 3)


@pytest.mark.parametrize("n, expected", [(1, 0), (2, 1), (3, 3), (4, 6)])
def test_antisymmetric_excess(n, expected):
    assert antisymmetric_excess(n) == expected


def test_mhs_compilation_layout():
    system = two_group_system()
    embedding = mhs_to_prodsat(system)
    instance, sdr = embedding
    assert instance.is_qubit_only()
    assert sdr.is_valid(underlying_hypergraph(instance))
    assert embedding.copies == [[0], [1, 2]]
    assert embedding.pre_reduction.dims == (2, 3, 3)
    assert len(embedding.singlets) == 2

    pre = embedding.pre_reduction
    patterns = []
    for c in pre.constraints:
        tensor = c.tensor(pre.dims)
        patterns.append(sorted(tuple(int(i) for i in idx) for idx in zip(*np.nonzero(np.abs(tensor) > 1e-12))))
    assert patterns == [[(0, 0, 1), (1, 1, 2)], [(0, 0), (1, 1)], [(0, 1), (1, 2)]]


def test_mhs_solution_round_trip():
    system = two_group_system()
    embedding = mhs_to_prodsat(system)
    # x = (0.6, 0.8), y = (0, 0, 1) 满足全部三个方程
    x = np.array([0.6, 0.8], dtype=complex)
    y = np.array([0, 0, 1], dtype=complex)
    copies = ProductState([x, y, y])
    state = transport_solution(embedding.chain, copies, "lift")
    assert constraint_energies(embedding.instance, state).max() < 1e-20

    solution = extract_mhs_solution(system, embedding, state)
    assert solution.max_residual < 1e-9
    assert solution.copy_disagreement < 1e-9
    assert solution.singlet_residual < 1e-9
    assert proportionality_residual(solution.groups[1], y) < 1e-12


def test_mhs_refuses_zero_bezout_number():
    eq = Equation({((0, 0, 1),): 1, ((0, 1, 1),): 1})
    system = MultiHomSystem((2, 2), [eq, eq])
    with pytest.raises(RefusedError) as info:
        mhs_to_prodsat(system)
    assert isinstance(info.value.certificate, HallViolation)


def test_qubit_only_instance_needs_no_split():
    inst = QsatInstance((2, 2), [])
    reduced, chain = reduce_to_qubits(inst)
    assert reduced.dims == (2, 2)
    assert len(chain) == 0


def test_preimage_round_trip_over_many_pairs():
    for seed in range(200):
        rng = np.random.default_rng(seed)
        d = 2 + seed % 4
        z = f_map(cvec(rng, 2), cvec(rng, d))
        assert np.linalg.norm(z) > 0, seed
        x, y = f_preimage(z)
        assert proportionality_residual(f_map(x, y), z) <= 1e-10, seed


def test_transport_keeps_residuals_over_many_pairs():
    for seed in range(200):
        rng = np.random.default_rng(seed)
        d = 2 + seed % 3
        inst = random_instance((d + 1, 2), [(0, 1)], seed=seed)
        reduced, chain = reduce_to_qubits(inst)
        C = inst.constraints[0].tensor(inst.dims)
        v = cvec(rng, d + 1)
        xbar = v @ C
        original = ProductState([v, np.array([xbar[1], -xbar[0]])])
        before = constraint_energies(inst, original)
        lifted = transport_solution(chain, original, "lift")
        assert np.abs(constraint_energies(reduced, lifted) - before).max() <= 1e-9, seed
        pushed = transport_solution(chain, lifted, "push")
        assert np.abs(constraint_energies(inst, pushed) - before).max() <= 1e-9, seed
