import numpy as np
import pytest

from casimir_hybrid.errors import DimensionOverflow, IndexOutOfRange, InvalidCutoff, SpaceMismatch
from casimir_hybrid.fockspace import (
    ModeLadder,
    OperatorMatrix,
    annihilator,
    build_space,
    expectation,
    identity,
    ladder_matrix,
    number_operator,
    qubit_lowering,
)


def single_space(nb=3, nc=4):
    return build_space([ModeLadder(nb, "mech"), ModeLadder(nc, "cavity")], 1)


def test_dimension_and_subsystems():
    s = single_space()
    assert s.subsystem_dims == (2, 4, 5)
    assert s.dim == 40


def test_label_roundtrip():
    s = single_space()
    for i in range(s.dim):
        assert s.parse_label(s.label(i)) == i
    assert s.label(s.index_of((1, 0, 2))) == "|e,0,2>"
    assert s.parse_label(("g", 1, 0)) == s.index_of((0, 1, 0))


def test_invalid_cutoff_and_overflow():
    with pytest.raises(InvalidCutoff):
        build_space([0], 1)
    with pytest.raises(DimensionOverflow):
        build_space([50, 50, 50], 1, ceiling=1000)


def test_index_out_of_range():
    s = single_space()
    with pytest.raises(IndexOutOfRange):
        s.occupations(s.dim)
    with pytest.raises(IndexOutOfRange):
        s.index_of((0, 4, 0))
    with pytest.raises(IndexOutOfRange):
        s.parse_label("|x,0,0>")


def test_commutator_below_cutoff():
    s = single_space()
    a = annihilator(s, 1)
    comm = (a @ a.dag - a.dag @ a).entries
    n_cav = np.array([occ[2] for occ in s.iter_occupations()])
    below = n_cav < s.modes[1].cutoff
    assert np.allclose(comm[np.ix_(below, below)], np.eye(below.sum()))


def test_ladder_elements():
    a = ladder_matrix(4)
    assert a[2, 3] == pytest.approx(np.sqrt(3))
    assert np.count_nonzero(a) == 4


def test_number_operator_diagonal():
    s = single_space()
    n = number_operator(s, 0).entries
    expected = [occ[1] for occ in s.iter_occupations()]
    assert np.allclose(np.diag(n), expected)
    assert np.allclose(n, np.diag(np.diag(n)))


def test_qubit_lowering_maps_e_to_g():
    s = single_space()
    sm = qubit_lowering(s, 0)
    out = sm.entries @ s.basis_state("|e,1,2>")
    assert np.allclose(out, s.basis_state("|g,1,2>"))


def test_space_mismatch():
    a = annihilator(single_space(), 0)
    b = annihilator(single_space(3, 3), 0)
    with pytest.raises(SpaceMismatch):
        a + b
    with pytest.raises(SpaceMismatch):
        OperatorMatrix(single_space(), np.eye(3))


def test_hermiticity_and_expectation():
    s = single_space()
    a = annihilator(s, 1)
    x = a + a.dag
    assert x.is_hermitian()
    assert not a.is_hermitian()
    psi = s.basis_state("|g,0,2>")
    assert expectation(number_operator(s, 1), psi) == pytest.approx(2.0)
    rho = np.outer(psi, psi.conj())
    assert expectation(number_operator(s, 1), rho) == pytest.approx(2.0)
    assert expectation(identity(s), rho) == pytest.approx(1.0)
