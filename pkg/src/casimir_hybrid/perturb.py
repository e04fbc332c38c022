"""Closed-form effective coupling rates from perturbation theory in the polaron frame.

Every rate is evaluated at the parameters passed in, typically with the
swept frequency set to the numerically located splitting minimum.  Rates
come out with their own sign; compare |2 * omega_eff| with a numeric gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import SingularDenominator, UnknownMethod, WrongModel
from .models import ModelKind, ModelParams

SQRT2 = math.sqrt(2.0)
SINGULAR_TOL = 1e-6


@dataclass(frozen=True)
class CouplingEstimate:
    omega_eff: float
    formula_id: str
    inputs: ModelParams

    @property
    def splitting(self) -> float:
        """Predicted gap 2|Omega|."""
        return 2.0 * abs(self.omega_eff)


def _denominator(value: float, what: str) -> float:
    if abs(value) <= SINGULAR_TOL:
        raise SingularDenominator(f"{what} = {value:.3e} is resonant; perturbative rate undefined")
    return value


def _require(p: ModelParams, kind: ModelKind):
    if p.kind != kind:
        raise WrongModel(f"formula needs a {kind.value} model, got {p.kind.value}")


def rate_g10_e01(p: ModelParams) -> CouplingEstimate:
    """|g,1,0> <-> |e,0,1>: pair-creation path plus direct counter-rotating term."""
    _require(p, ModelKind.SINGLE)
    wm, wc, g, lam = p.omega_m, p.omega_c[0], p.g, p.lam[0]
    den = _denominator(wm - 2 * wc + 4 * g**2 / wm, "omega_m - 2 omega_c + 4 g^2/omega_m")
    dce = lam * g * (SQRT2 - SQRT2 * g**2 / (2 * wm**2)) * (SQRT2 / 2 + SQRT2 * g**2 / wm**2) / den
    crt = -lam * g / wm + lam * g**3 / (2 * wm**3)
    return CouplingEstimate(dce + crt, "g10_e01", p)


def rate_g20_e01(p: ModelParams) -> CouplingEstimate:
    """|g,2,0> <-> |e,0,1>: two virtual pair-creation paths plus a second-order direct term."""
    _require(p, ModelKind.SINGLE)
    wm, wc, g, lam = p.omega_m, p.omega_c[0], p.g, p.lam[0]
    d1 = _denominator(wm - wc + 2 * g**2 / wm, "omega_m - omega_c + 2 g^2/omega_m")
    d2 = _denominator(wm - 2 * wc + 4 * g**2 / wm, "omega_m - 2 omega_c + 4 g^2/omega_m")
    amp = g**2 * lam / wm * (SQRT2 - SQRT2 * g**2 / (2 * wm**2))
    return CouplingEstimate(-amp / d1 + amp / d2 + SQRT2 * lam * g**2 / (2 * wm**2), "g20_e01", p)


def rate_freq_conversion(p: ModelParams) -> CouplingEstimate:
    """(|g,1,0,0> - |g,0,0,2>)/sqrt2 <-> |e,0,1,0> in the two-mode model."""
    _require(p, ModelKind.TWO_MODES)
    wm, g, lam = p.omega_m, p.g, p.lam[0]
    w1, w2 = p.omega_c
    c2 = w2 / w1  # c^2 of the rotated-mode definition
    den = _denominator(2 * (w2 - w1) - 4 * g**2 * (c2**2 - 1) / wm, "2(omega_c2 - omega_c1) - 4 g^2 (c^4 - 1)/omega_m")
    num = -lam * (1 - (1 + c2) * g**2 / (2 * wm**2)) * (
        2 * g**2 * c2 / wm + SQRT2 * g / 2 + (1 + c2) ** 2 * g**3 * SQRT2 / wm**2
    )
    direct = -(-g * lam / wm + (1 + c2) ** 2 * lam * g**3 / (2 * wm**3)) / SQRT2
    return CouplingEstimate(num / den + direct, "freq_conversion", p)


def rate_two_atom(p: ModelParams) -> CouplingEstimate:
    """|g,g,1,0> <-> |e,e,0,0>: one phonon shared by two atoms."""
    _require(p, ModelKind.TWO_ATOMS)
    wm, wc, g = p.omega_m, p.omega_c[0], p.g
    wa1, wa2 = p.omega_a
    l1, l2 = p.lam
    d1 = _denominator(wm - wc - wa1 + g**2 / wm, "omega_m - omega_c - omega_a1 + g^2/omega_m")
    d2 = _denominator(wm - wc - wa2 + g**2 / wm, "omega_m - omega_c - omega_a2 + g^2/omega_m")
    d3 = _denominator(wm - 2 * wc + 4 * g**2 / wm, "omega_m - 2 omega_c + 4 g^2/omega_m")
    shrink = 1 - g**2 / (2 * wm**2)
    single = g * l1 * l2 / wm * shrink * (-1 + g**2 / (2 * wm**2))
    chain = 2 * g * l1 * l2 * shrink**2 * (0.5 + g**2 / wm**2)
    return CouplingEstimate(single / d1 + single / d2 + chain / (d1 * d3) + chain / (d2 * d3), "two_atom", p)


def displacement_element(k_out: int, k_in: int, alpha: float) -> float:
    """<k_out| exp[alpha (b - b^dag)] |k_in> for real alpha, via associated Laguerre polynomials."""
    if k_out < 0 or k_in < 0:
        raise ValueError("Fock indices must be non-negative")
    if k_out < k_in:
        # D(alpha)^dag = D(-alpha), real entries
        return displacement_element(k_in, k_out, -alpha)
    m = k_out - k_in
    x = alpha * alpha
    log_pref = 0.5 * (gammaln(k_in + 1) - gammaln(k_out + 1))
    return float(math.exp(log_pref - x / 2) * (-alpha) ** m * eval_genlaguerre(k_in, m, x))


def displacement_matrix(cutoff: int, alpha: float) -> np.ndarray:
    return np.array([[displacement_element(i, j, alpha) for j in range(cutoff + 1)] for i in range(cutoff + 1)])


RABI_METHODS = ("DCE_only_displaced", "DCE_only_polaron", "two_photon_corrected", "two_photon_polaron")


def rate_rabi_comparison(p: ModelParams, method: str) -> CouplingEstimate:
    """Alternative closed forms for the same single-atom crossing (and the two-photon Rabi variant).

    DCE_only_displaced   pair-creation path in the displaced-oscillator basis
    DCE_only_polaron     pair-creation path in the polaron frame, no counter-rotating term
    two_photon_corrected two-photon Rabi coupling with displaced-phonon overlaps kept
    two_photon_polaron   two-photon Rabi coupling in the polaron frame
    """
    _require(p, ModelKind.SINGLE)
    if method not in RABI_METHODS:
        raise UnknownMethod(f"unknown method {method!r}; choose from {RABI_METHODS}")
    wm, wc, wa, g, lam = p.omega_m, p.omega_c[0], p.omega_a[0], p.g, p.lam[0]
    beta = p.beta
    D = displacement_element
    pair_den = _denominator(wm - 2 * wc + 4 * g**2 / wm, "omega_m - 2 omega_c + 4 g^2/omega_m")
    if method == "DCE_only_displaced":
        val = SQRT2 * lam * D(0, 0, beta) * (SQRT2 / 2 * g * D(0, 0, -2 * beta) + g * D(0, 2, -2 * beta)) / pair_den
    elif method == "DCE_only_polaron":
        val = lam * g * (SQRT2 - SQRT2 * g**2 / (2 * wm**2)) * (SQRT2 / 2 + SQRT2 * g**2 / wm**2) / pair_den
    else:
        crt_den = _denominator(-wa - 2 * wc + 4 * g**2 / wm, "-omega_a - 2 omega_c + 4 g^2/omega_m")
        if method == "two_photon_corrected":
            val = (g * lam * D(0, 0, 2 * beta) - 2 * g * lam * beta * D(0, 1, 2 * beta)) * D(1, 1, -2 * beta) / crt_den
            val += lam * g * D(0, 0, 2 * beta) * D(0, 0, -2 * beta) / pair_den
        else:
            val = (lam * g - 6 * lam * g**3 / wm**2) / crt_den + (lam * g + 2 * lam * g**3 / wm**2) / pair_den
    return CouplingEstimate(val, method, p)
