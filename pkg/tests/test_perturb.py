import math

import numpy as np
import pytest
from scipy.linalg import expm

from casimir_hybrid.errors import SingularDenominator, UnknownMethod, WrongModel
from casimir_hybrid.fockspace import ladder_matrix
from casimir_hybrid.models import ModelParams
from casimir_hybrid.perturb import (
    RABI_METHODS,
    displacement_element,
    displacement_matrix,
    rate_freq_conversion,
    rate_g10_e01,
    rate_g20_e01,
    rate_rabi_comparison,
    rate_two_atom,
)
from casimir_hybrid.spectra import locate_min_splitting


def single(g=0.03, lam=0.005, wc=0.6, wa=0.4):
    return ModelParams.single_atom(wc, wa, g, lam)


@pytest.mark.parametrize("alpha", [0.03, -0.2, 0.7])
def test_displacement_matches_expm(alpha):
    # truncate well above the compared block so edge effects vanish
    b = ladder_matrix(60)
    exact = expm(alpha * (b - b.T))[:8, :8]
    assert np.abs(displacement_matrix(7, alpha) - exact).max() < 1e-9


def test_displacement_unitarity_and_symmetry():
    assert displacement_element(0, 0, 0.1) == pytest.approx(math.exp(-0.005))
    assert displacement_element(1, 0, 0.1) == pytest.approx(-0.1 * math.exp(-0.005))
    assert displacement_element(0, 1, 0.1) == pytest.approx(0.1 * math.exp(-0.005))
    # D(alpha)^dag = D(-alpha)
    assert displacement_element(2, 5, 0.3) == pytest.approx(displacement_element(5, 2, -0.3))
    col = [displacement_element(k, 2, 0.4) for k in range(60)]
    assert sum(c * c for c in col) == pytest.approx(1.0, abs=1e-12)


def test_displacement_zero_is_identity():
    assert np.allclose(displacement_matrix(5, 0.0), np.eye(6))


def test_g10_e01_small_coupling_agreement():
    p = single(g=0.02)
    rep = locate_min_splitting(p, "omega_c", (0.59, 0.61), (3, 4))
    est = rate_g10_e01(p.with_value("omega_c", rep.axis_value_at_min))
    assert est.splitting == pytest.approx(rep.splitting, rel=0.02)
    assert est.formula_id == "g10_e01"


def test_zero_atom_coupling_gives_zero_rate():
    p = single(lam=0.0)
    assert rate_g10_e01(p).omega_eff == 0.0
    assert rate_g20_e01(p.with_value("omega_c", 1.2).with_value("omega_a", 0.8)).omega_eff == 0.0


def test_rates_scale_linearly_in_lambda():
    a = rate_g10_e01(single(lam=0.01)).omega_eff
    b = rate_g10_e01(single(lam=0.005)).omega_eff
    assert a == pytest.approx(2 * b)


def test_singular_denominator():
    with pytest.raises(SingularDenominator):
        rate_g10_e01(single(wc=(1 + 4 * 0.03**2) / 2))


def test_wrong_model():
    with pytest.raises(WrongModel):
        rate_two_atom(single())
    with pytest.raises(WrongModel):
        rate_freq_conversion(single())


def test_unknown_method():
    with pytest.raises(UnknownMethod):
        rate_rabi_comparison(single(), "exact")


def test_rabi_variants_finite_and_close():
    p = single(g=0.02, wc=0.5995)
    vals = [rate_rabi_comparison(p, m).splitting for m in RABI_METHODS]
    assert all(np.isfinite(vals))
    assert max(vals) / min(vals) < 1.5
    # polaron variant agrees with the displaced-basis variant to second order in g
    a = rate_rabi_comparison(p, "DCE_only_displaced").splitting
    b = rate_rabi_comparison(p, "DCE_only_polaron").splitting
    assert a == pytest.approx(b, rel=5e-3)


def test_two_atom_rate_symmetric():
    p = ModelParams.two_atoms(0.7, 0.5, 0.5, 0.01, 0.014, 0.022)
    q = ModelParams.two_atoms(0.7, 0.5, 0.5, 0.01, 0.022, 0.014)
    assert rate_two_atom(p).omega_eff == pytest.approx(rate_two_atom(q).omega_eff)
