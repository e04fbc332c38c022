import math

import numpy as np
import pytest

from casimir_hybrid.errors import DegenerateDetuning, InvalidOrder, ValidationError, WrongModel
from casimir_hybrid.models import (
    CircuitParams,
    DriveSpec,
    ModelParams,
    bare_hamiltonian,
    charge_qubit_g,
    drive_amplitude,
    hybridize,
    hybridized_hamiltonian,
    model_operators,
    transformed_hamiltonian,
)


def single(g=0.03, lam=0.005, wc=0.6, wa=0.4, cutoffs=(6, 6)):
    return ModelParams.single_atom(wc, wa, g, lam, cutoffs)


@pytest.mark.parametrize(
    "p",
    [
        single(),
        ModelParams.two_modes(0.65, 0.5, 0.34, 0.02, 0.01, cutoffs=(3, 3, 3)),
        ModelParams.two_atoms(0.55, 0.5, 0.51, 0.007, 0.007, 0.009, cutoffs=(4, 3)),
    ],
)
def test_hamiltonians_hermitian(p):
    assert bare_hamiltonian(p).hermiticity_residual() < 1e-12
    assert transformed_hamiltonian(p).hermiticity_residual() < 1e-12


def test_uncoupled_spectrum_is_free():
    p = single(g=0.0, lam=0.0)
    E = np.linalg.eigvalsh(bare_hamiltonian(p).entries)
    free = sorted(j * 0.4 + k + n * 0.6 for j in (0, 1) for k in range(7) for n in range(7))
    assert np.allclose(E, free)


def test_independent_construction():
    p = single(cutoffs=(3, 4))
    ops = model_operators(p)
    b, (a,), (s,) = ops.b, ops.a, ops.sm
    # |j,k,n> with sigma_- = |g><e|
    ref = (0.6 * a.T @ a + b.T @ b + 0.4 * s.T @ s + 0.03 * a.T @ a @ (b + b.T)
           + 0.015 * (a @ a + a.T @ a.T) @ (b + b.T) + 0.005 * (a + a.T) @ (s + s.T))
    assert np.abs(bare_hamiltonian(p).entries - ref).max() < 1e-15


def test_hybridized_matches_bare():
    p = ModelParams.two_modes(0.65, 0.5, 0.34, 0.02, 0.01, cutoffs=(3, 4, 4))
    assert np.abs(hybridized_hamiltonian(p).entries - bare_hamiltonian(p).entries).max() < 1e-12
    hm = hybridize(p)
    assert hm.c == pytest.approx(math.sqrt(0.5 / 0.65))
    assert hm.G == pytest.approx((1 + hm.c**2) * 0.02)


def test_hybridize_wrong_model():
    with pytest.raises(WrongModel):
        hybridize(single())


def test_transformed_order_zero_at_zero_coupling_is_bare():
    p = single(g=0.0)
    assert np.abs(transformed_hamiltonian(p, series_order=0).entries - bare_hamiltonian(p).entries).max() < 1e-15


def test_transformed_matches_unitary_image():
    # low-lying spectrum of the truncated series converges to the exact one
    p = single(g=0.03, cutoffs=(10, 6))
    E_bare = np.linalg.eigvalsh(bare_hamiltonian(p).entries)[:6]
    E_tr = np.linalg.eigvalsh(transformed_hamiltonian(p, series_order=3).entries)[:6]
    assert np.abs(E_bare - E_tr).max() < 1e-4


def test_optomechanical_kerr_shift():
    # pure radiation-pressure part: E = wc n + k - g^2 n^2
    p = single(g=0.05, lam=0.0, cutoffs=(14, 3))
    ops = model_operators(p)
    b, (a,) = ops.b, ops.a
    na = a.T @ a
    H_om = 0.6 * na + b.T @ b + 0.05 * na @ (b + b.T)
    E = np.unique(np.round(np.linalg.eigvalsh(H_om), 9))[:4]  # atom is idle, levels come in pairs
    assert np.allclose(E, [0, 0.6 - 0.0025, 1.0, 1.2 - 0.01], atol=1e-6)


def test_invalid_order():
    with pytest.raises(InvalidOrder):
        transformed_hamiltonian(single(), series_order=-1)


def test_params_validation():
    with pytest.raises(ValidationError):
        ModelParams.single_atom(0.6, 0.4, 0.03, 0.005, cutoffs=(-1, 6))
    with pytest.raises(ValidationError):
        ModelParams.single_atom(-0.6, 0.4, 0.03, 0.005)
    with pytest.raises(ValidationError):
        single().with_value("omega_q", 1.0)


def test_with_value_axes():
    p = ModelParams.two_atoms(0.55, 0.5, 0.51, 0.007, 0.007, 0.009)
    assert p.with_value("omega_a", 0.3).omega_a == (0.3, 0.3)
    assert p.with_value("omega_a2", 0.3).omega_a == (0.5, 0.3)
    assert p.with_value("lambda1", 0.1).lam == (0.1, 0.009)
    assert p.with_value("g", 0.1).value("g") == 0.1


def test_charge_qubit_coupling():
    assert charge_qubit_g(CircuitParams(0.1, 0.2, 2.0, 1.0)) == pytest.approx(2 * 0.1 * 0.04)
    with pytest.raises(DegenerateDetuning):
        charge_qubit_g(CircuitParams(0.1, 0.2, 1.0, 1.0))


def test_pulse_normalization():
    d = DriveSpec.pulse(1.0, 10.0, 80.0, omega_d=0.0 + 1e-12)
    t = np.linspace(0, 160, 20001)
    area = np.trapezoid(drive_amplitude(d, t), t)
    assert area == pytest.approx(1.0, rel=1e-6)
    peak = DriveSpec.pulse(1.0, 10.0, 80.0, normalization="peak")
    assert drive_amplitude(peak, 80.0) == pytest.approx(math.cos(80.0))
    with pytest.raises(ValidationError):
        DriveSpec("Square", 1.0)
