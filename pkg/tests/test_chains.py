"""环与风车图求解"""
import numpy as np
import pytest

from prodsat.chains import (affine_parameters, closure_candidates, cycle_coefficients, cycle_layout,
                            is_pinwheel, is_qubit_cycle, is_qutrit_cycle, pinwheel_layout,
                            pinwheel_parent, pinwheel_vertex, ring_assignments, solve_cycle_qubits,
                            solve_cycle_qutrits, solve_pinwheel, transfer_matrix)
from prodsat.examples import gen_cycle, gen_pinwheel, random_instance, singlet_cycle, with_affine_constraints
from prodsat.exceptions import InvalidInstanceError
from prodsat.models import Constraint, QsatInstance, contract_constraint, proportionality_residual
from prodsat.solver import solve_instance


def cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


@pytest.mark.parametrize("n, seed", [(3, 0), (4, 1), (7, 2), (20, 3)])
def test_random_qubit_cycles(n, seed):
    inst = gen_cycle(2, n, seed)
    assert is_qubit_cycle(inst)
    report = solve_cycle_qubits(inst)
    assert report.passed, report.failure
    assert report.diagnostics["candidates"] == 2


@pytest.mark.parametrize("n", [3, 4, 5])
def test_singlet_cycle_is_solvable(n):
    report = solve_cycle_qubits(singlet_cycle(n))
    assert report.passed
    assert report.max_residual < 1e-24


def test_transfer_matrix_propagates_forced_value(rng):
    E = cvec(rng, 4).reshape(2, 2)
    psi = cvec(rng, 2)
    nxt = transfer_matrix(E) @ psi
    assert abs(psi @ E @ nxt) < 1e-12


def test_closure_switches_chart():
    M = np.array([[1, 1], [0, 2]], dtype=complex)
    candidates = closure_candidates(M)
    assert len(candidates) == 2
    assert any(proportionality_residual(v, np.array([1, 0])) < 1e-12 for v in candidates)
    for v in candidates:
        assert proportionality_residual(M @ v, v) < 1e-10


def test_closure_degenerate_products():
    assert closure_candidates(np.zeros((2, 2))) == []
    only = closure_candidates(3 * np.eye(2))
    assert len(only) == 1
    assert np.allclose(only[0], [1, 0])


def test_nilpotent_ring_has_no_assignment():
    E = np.array([[1, 0], [0, 0]], dtype=complex)
    assert ring_assignments([E] * 4) is None


def test_reversed_constraint_orientation(rng):
    inst = gen_cycle(2, 5, seed=4)
    constraints = list(inst.constraints)
    c = constraints[2]
    flipped = c.tensor(inst.dims).T.reshape(-1)
    constraints[2] = Constraint.from_coefficients(c.qudits[::-1], flipped)
    twisted = QsatInstance(inst.dims, constraints)
    layout = cycle_layout(twisted)
    assert layout is not None
    assert layout.reversed.count(True) == 1
    assert solve_cycle_qubits(twisted).passed


def test_non_cycles_are_not_detected():
    path = random_instance((2, 2, 2), [(0, 1), (1, 2)], seed=0)
    assert cycle_layout(path) is None
    assert not is_qubit_cycle(path)
    two_triangles = random_instance((2,) * 6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)], seed=0)
    assert cycle_layout(two_triangles) is None
    with pytest.raises(InvalidInstanceError):
        solve_cycle_qubits(path)


def test_cycle_coefficients_match_lifted_contraction(rng):
    phi = cvec(rng, 9).reshape(3, 3)
    alpha, beta = cvec(rng, 2), cvec(rng, 2)
    A, B, C, D = cycle_coefficients(phi, alpha, beta)
    E = np.array([[C, A], [D, B]])
    psi, chi = cvec(rng, 2), cvec(rng, 2)
    lift_psi = np.array([alpha[0] * psi[0] + alpha[1] * psi[1], psi[0], psi[1]])
    lift_chi = np.array([beta[0] * chi[0] + beta[1] * chi[1], chi[0], chi[1]])
    assert contract_constraint(phi, [lift_psi, lift_chi]) == pytest.approx(psi @ E @ chi)


@pytest.mark.parametrize("n, seed", [(3, 0), (4, 1), (6, 2)])
def test_qutrit_cycle_with_affine_constraints(rng, n, seed):
    alphas = [tuple(cvec(rng, 2)) for _ in range(n)]
    inst = with_affine_constraints(gen_cycle(3, n, seed), alphas)
    assert is_qutrit_cycle(inst)
    recovered = affine_parameters(inst)
    assert np.allclose(recovered, alphas)
    report = solve_cycle_qutrits(inst)
    assert report.passed, report.failure
    assert solve_instance(inst).method == "qutrit-cycle"


def test_qutrit_cycle_without_one_local_constraints():
    inst = gen_cycle(3, 5, seed=6)
    assert affine_parameters(inst) is None
    report = solve_cycle_qutrits(inst)
    assert report.passed
    assert all(abs(v[0]) < 1e-12 for v in report.state.locals)


def test_qutrit_cycle_with_explicit_parameters(rng):
    inst = gen_cycle(3, 4, seed=8)
    alphas = [tuple(cvec(rng, 2)) for _ in range(4)]
    report = solve_cycle_qutrits(inst, one_local=alphas)
    assert report.passed
    for v, (a1, a2) in zip(report.state.locals, alphas):
        assert abs(v[0] - a1 * v[1] - a2 * v[2]) < 1e-10 * np.linalg.norm(v)


def test_affine_constraint_must_have_constant_term():
    inst = gen_cycle(3, 3, seed=0)
    constraints = list(inst.constraints) + [Constraint.from_coefficients((q,), [0, 1, 0]) for q in range(3)]
    with pytest.raises(InvalidInstanceError):
        affine_parameters(QsatInstance(inst.dims, constraints))


def test_pinwheel_indexing():
    assert pinwheel_vertex(0, 0) == 0
    assert [pinwheel_vertex(2, k) for k in range(4)] == [3, 4, 5, 6]
    assert pinwheel_vertex(2, 4) == 3
    assert pinwheel_parent(1, 1) == 0
    assert pinwheel_parent(2, 3) == pinwheel_vertex(1, 1)
    kinds = [kind for kind, _, _, _ in pinwheel_layout(2)]
    assert kinds.count("ring") == 6
    assert kinds.count("radial") == 6
    assert kinds.count("spoke") == 2


def test_pinwheel_detection():
    inst = gen_pinwheel(2, seed=7)
    assert is_pinwheel(inst)
    relabeled = QsatInstance(inst.dims, inst.constraints, {"family": "random"})
    assert not is_pinwheel(relabeled)
    with pytest.raises(InvalidInstanceError):
        solve_pinwheel(relabeled)


@pytest.mark.parametrize("n", [1, 2])
def test_pinwheel_is_solved(n):
    inst = gen_pinwheel(n, seed=7)
    report = solve_pinwheel(inst, eps=1e-6, seed=7)
    assert report.passed, report.failure
    assert report.max_residual <= 1e-6
    assert report.diagnostics["converged"] >= 1
    assert solve_instance(inst, eps=1e-6, seed=7).method == "pinwheel"
