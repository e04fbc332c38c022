import numpy as np
import pytest

from casimir_hybrid.errors import IndexOutOfRange, NoBracketedMinimum, NotHermitian
from casimir_hybrid.fockspace import OperatorMatrix, build_space
from casimir_hybrid.models import ModelParams, bare_hamiltonian
from casimir_hybrid.spectra import (
    eigen_residual,
    eigensolve,
    find_min_splitting,
    gap_at,
    label_weight,
    locate_min_splitting,
    state_composition,
    sweep,
    unperturbed_energy,
)


def reference_model(g=0.03, lam=0.005, wc=0.6):
    return ModelParams.single_atom(wc, 0.4, g, lam)


def test_eigensolve_residual_and_order():
    H = bare_hamiltonian(reference_model())
    sol = eigensolve(H)
    assert eigen_residual(H, sol) < 1e-10
    assert np.all(np.diff(sol.values) >= 0)
    assert sol.relative()[0] == 0.0


def test_eigensolve_rejects_non_hermitian():
    s = build_space([1], 0)
    with pytest.raises(NotHermitian):
        eigensolve(OperatorMatrix(s, np.array([[0, 1], [0, 0]])))


def test_two_level_crossing_oracle():
    # 2x2 matrix [[x, v], [v, -x]] has minimum gap 2v at x=0
    s = build_space([1], 0)
    v = 0.013
    sol = eigensolve(OperatorMatrix(s, np.array([[0.0, v], [v, 0.0]])))
    assert sol.gap(0) == pytest.approx(2 * v)


def test_uncoupled_energies_match_closed_form():
    p = ModelParams.single_atom(0.6, 0.4, 0.0, 0.0)
    sol = eigensolve(bare_hamiltonian(p))
    for lab in ("|g,1,0>", "|e,0,1>", "|g,0,2>"):
        k = int(np.argmax(np.abs(sol.vectors[sol.space.parse_label(lab)])))
        assert sol.values[k] == pytest.approx(unperturbed_energy(p, lab))


def test_reference_crossing():
    rep = find_min_splitting(reference_model(), "omega_c", (0.595, 0.603), (3, 4))
    assert rep.splitting == pytest.approx(1.83e-3, rel=0.05)
    assert rep.axis_value_at_min == pytest.approx(0.6, abs=0.01)
    assert rep.resonance_order == 1
    for side in rep.state_composition:
        labels = {lab: abs(amp) ** 2 for lab, amp in side}
        assert labels["|g,1,0>"] == pytest.approx(0.5, abs=0.05)
        assert labels["|e,0,1>"] == pytest.approx(0.5, abs=0.05)


def test_splitting_scales_linearly_in_atom_coupling():
    a = locate_min_splitting(reference_model(lam=0.005), "omega_c", (0.59, 0.61), (3, 4)).splitting
    b = locate_min_splitting(reference_model(lam=0.0025), "omega_c", (0.59, 0.61), (3, 4)).splitting
    assert a / b == pytest.approx(2.0, rel=0.01)


def test_no_bracketed_minimum():
    with pytest.raises(NoBracketedMinimum):
        find_min_splitting(reference_model(), "omega_c", (0.3, 0.35), (3, 4))
    with pytest.raises(NoBracketedMinimum):
        find_min_splitting(reference_model(), "omega_c", (0.6, 0.6), (3, 4))


def test_sweep_follows_states_through_exact_crossing():
    # without the atom coupling |g,1,0> and |e,0,1> cross exactly; tracking keeps each state
    grid = np.linspace(0.59, 0.61, 41)
    sw = sweep(reference_model(lam=0.0), "omega_c", grid, 5)
    assert sw.tracked_levels.shape == (5, 41)
    assert sw.eigen_indices[3, 0] != sw.eigen_indices[3, -1]
    assert sw.overlap_continuity.min() > 0.99


def test_sweep_stays_adiabatic_through_avoided_crossing():
    grid = np.linspace(0.59, 0.61, 41)
    sw = sweep(reference_model(), "omega_c", grid, 5)
    assert np.all(sw.tracked_levels[3] < sw.tracked_levels[4])


def test_sweep_threads_match_serial():
    grid = np.linspace(0.5, 0.7, 9)
    a = sweep(reference_model(), "omega_c", grid, 4)
    b = sweep(reference_model(), "omega_c", grid, 4, threads=3)
    assert np.array_equal(a.tracked_levels, b.tracked_levels)


def test_gap_at_matches_eigensolve():
    p = reference_model()
    sol = eigensolve(bare_hamiltonian(p))
    assert gap_at(p, "omega_c", 0.6, (3, 4)) == pytest.approx(sol.gap(3))


def test_state_composition_errors_and_weights():
    sol = eigensolve(bare_hamiltonian(reference_model()))
    comp = state_composition(sol, 0, 3)
    assert comp[0][0] == "|g,0,0>"
    assert comp[0][1].real > 0
    assert label_weight(sol, 0, "|g,0,0>") > 0.99
    with pytest.raises(IndexOutOfRange):
        state_composition(sol, sol.space.dim)
