"""实例、乘积态与能量"""
import numpy as np
import pytest

from prodsat.examples import random_instance
from prodsat.exceptions import DimensionMismatchError, InvalidInstanceError
from prodsat.hypergraph import HallViolation
from prodsat.models import (CnfFormula, Constraint, ProductState, QsatInstance, constraint_energies,
                            energy, entangled_subspace_max_dim, proportionality_residual,
                            solve_sat_with_sdr, to_mhs, underlying_hypergraph)


def random_state(rng, dims):
    return ProductState([rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in dims])


def test_energy_of_basis_states():
    inst = QsatInstance((2, 2), [Constraint((0, 1), [1, 0, 0, 0])])
    assert energy(inst, ProductState([[0, 1], [0, 1]])) == (0.0, 0.0)
    total, worst = energy(inst, ProductState([[1, 0], [1, 0]]))
    assert total == pytest.approx(1.0)
    assert worst == pytest.approx(1.0)


def test_energy_ignores_local_normalization():
    inst = QsatInstance((2, 2), [Constraint((0, 1), [1, 0, 0, 0])])
    scaled = ProductState([[3, 3], [2j, 0]])
    assert energy(inst, scaled)[0] == pytest.approx(0.5)


def test_first_qudit_is_most_significant():
    # |01⟩ 振幅在下标 1
    inst = QsatInstance((2, 3), [Constraint((0, 1), [0, 1, 0, 0, 0, 0])])
    assert energy(inst, ProductState([[1, 0], [0, 1, 0]]))[0] == pytest.approx(1.0)
    assert energy(inst, ProductState([[0, 1], [1, 0, 0]]))[0] == pytest.approx(0.0)


def test_coefficients_are_conjugate_amplitudes():
    c = Constraint.from_amplitudes((0,), [1j, 1])
    assert np.allclose(c.coefficients, np.conj(c.amps))
    assert np.allclose(Constraint.from_coefficients((0,), [1j, 1]).amps, np.array([-1j, 1]) / np.sqrt(2))


def test_invalid_constraints_are_rejected():
    with pytest.raises(InvalidInstanceError):
        Constraint((0, 1), [1, 1, 0, 0])
    with pytest.raises(InvalidInstanceError):
        Constraint((0, 0), [1, 0, 0, 0])
    with pytest.raises(InvalidInstanceError):
        Constraint.from_amplitudes((0,), [0, 0])
    with pytest.raises(InvalidInstanceError):
        QsatInstance((2, 3), [Constraint((0, 1), [1, 0, 0, 0])])
    with pytest.raises(InvalidInstanceError):
        QsatInstance((2, 1), [])


def test_state_dimension_mismatch():
    inst = QsatInstance((2, 3), [])
    with pytest.raises(DimensionMismatchError):
        energy(inst, ProductState([[1, 0], [1, 0]]))
    with pytest.raises(DimensionMismatchError):
        energy(inst, ProductState([[1, 0]]))


def test_empty_instance_has_zero_energy():
    assert energy(QsatInstance((2,), []), ProductState([[1, 0]])) == (0.0, 0.0)


@pytest.mark.parametrize("dims, expected", [((2, 2), 1), ((2, 2, 2), 4), ((3, 3), 4), ((2, 3), 2)])
def test_entangled_subspace_dimension(dims, expected):
    assert entangled_subspace_max_dim(dims) == expected


def test_underlying_hypergraph_weights():
    inst = random_instance((2, 3, 4), [(0, 1), (1, 2)], seed=3)
    h = underlying_hypergraph(inst)
    assert h.vertex_weights == (1, 2, 3)
    assert h.edges == ((0, 1), (1, 2))


def test_to_mhs_evaluates_to_overlaps(rng):
    inst = random_instance((2, 3, 2), [(0, 1), (2, 1), (0, 1, 2)], seed=5)
    state = random_state(rng, inst.dims).normalized()
    system = to_mhs(inst)
    assert system.group_sizes == (2, 3, 2)
    assert system.degrees == [(1, 1, 0), (0, 1, 1), (1, 1, 1)]
    values = np.abs(system.evaluate(state.locals)) ** 2
    assert np.allclose(values, constraint_energies(inst, state), atol=1e-12)


def test_proportionality_residual():
    u = np.array([1, 2j])
    assert proportionality_residual(u, (3 - 1j) * u) == pytest.approx(0.0, abs=1e-14)
    assert proportionality_residual(u, np.array([1, 0])) > 0.5
    assert proportionality_residual(u, np.zeros(2)) == 1.0


def test_sat_from_sdr():
    cnf = CnfFormula(3, [[1, 2], [-1, 3], [-2, -3]])
    result = solve_sat_with_sdr(cnf)
    assert isinstance(result, dict)
    assert cnf.evaluate(result)


def test_sat_without_sdr_reports_hall_violation():
    cnf = CnfFormula(1, [[1], [-1]])
    result = solve_sat_with_sdr(cnf)
    assert isinstance(result, HallViolation)
    assert result.is_valid(cnf.incidence_hypergraph())


def test_cnf_rejects_bad_literals():
    with pytest.raises(InvalidInstanceError):
        CnfFormula(2, [[3]])
    with pytest.raises(InvalidInstanceError):
        CnfFormula(2, [[]])


def test_instance_and_state_file_round_trip(tmp_path, rng):
    inst = random_instance((2, 3), [(0, 1), (1,)], seed=11)
    path = str(tmp_path / "inst.json")
    assert inst.save_to_file(path)
    loaded = QsatInstance.load_from_file(path)
    assert loaded.dims == inst.dims
    assert loaded.metadata == inst.metadata
    for a, b in zip(loaded.constraints, inst.constraints):
        assert a.qudits == b.qudits
        assert np.allclose(a.amps, b.amps)

    state = random_state(rng, inst.dims)
    spath = str(tmp_path / "state.json")
    assert state.save_to_file(spath)
    back = ProductState.load_from_file(spath)
    assert all(np.allclose(a, b) for a, b in zip(back.locals, state.locals))


def test_from_dict_requires_fields():
    with pytest.raises(InvalidInstanceError):
        QsatInstance.from_dict({"dims": [2]})
    with pytest.raises(InvalidInstanceError):
        ProductState.from_dict({})
