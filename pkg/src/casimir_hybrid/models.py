"""Hamiltonians of the three atom-cavity-mirror models.

Basis order follows fockspace: atoms first, then the mechanical mode, then
cavity mode(s).  Single-atom kets read |j,k,n>, two-mode kets |j,k,n1,n2>,
two-atom kets |j1,j2,k,n>, with k the phonon number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np
import scipy.sparse as sps

from .errors import DegenerateDetuning, InvalidOrder, SpaceMismatch, ValidationError, WrongModel
from .fockspace import HilbertSpace, ModeLadder, OperatorMatrix, annihilator, build_space, qubit_lowering


class ModelKind(str, Enum):
    SINGLE = "SingleAtomSingleMode"
    TWO_MODES = "SingleAtomTwoModes"
    TWO_ATOMS = "TwoAtomsSingleMode"


_SHAPES = {
    # (cavity modes, atoms, atom couplings)
    ModelKind.SINGLE: (1, 1, 1),
    ModelKind.TWO_MODES: (2, 1, 1),
    ModelKind.TWO_ATOMS: (1, 2, 2),
}

DEFAULT_CUTOFFS = {
    ModelKind.SINGLE: (6, 6),
    ModelKind.TWO_MODES: (5, 5, 6),
    ModelKind.TWO_ATOMS: (6, 6),
}


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters in units of the mechanical frequency.

    `cutoffs` lists the mechanical cutoff first, then one per cavity mode.
    """

    kind: ModelKind
    omega_c: tuple[float, ...]
    omega_a: tuple[float, ...]
    g: float
    lam: tuple[float, ...]
    cutoffs: tuple[int, ...] = ()
    omega_m: float = 1.0

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        for name in ("omega_c", "omega_a", "lam"):
            val = getattr(self, name)
            val = (float(val),) if np.isscalar(val) else tuple(float(v) for v in val)
            object.__setattr__(self, name, val)
        cut = tuple(int(c) for c in self.cutoffs) or DEFAULT_CUTOFFS[kind]
        object.__setattr__(self, "cutoffs", cut)
        n_cav, n_atom, n_lam = _SHAPES[kind]
        if len(self.omega_c) != n_cav or len(self.omega_a) != n_atom or len(self.lam) != n_lam:
            raise ValidationError(f"{kind.value} needs {n_cav} cavity, {n_atom} atom and {n_lam} coupling values")
        if len(cut) != n_cav + 1:
            raise ValidationError(f"{kind.value} needs {n_cav + 1} cutoffs (mechanical first)")
        if min(cut) < 1:
            raise ValidationError(f"cutoffs must be at least 1, got {cut}")
        if min(self.omega_c + self.omega_a + (self.omega_m,)) <= 0:
            raise ValidationError("all frequencies must be positive")
        if self.g < 0 or min(self.lam) < 0:
            raise ValidationError("coupling rates must be non-negative")

    @classmethod
    def single_atom(cls, omega_c, omega_a, g, lam, cutoffs=(6, 6), omega_m=1.0):
        return cls(ModelKind.SINGLE, (omega_c,), (omega_a,), g, (lam,), cutoffs, omega_m)

    @classmethod
    def two_modes(cls, omega_c1, omega_c2, omega_a, g, lam, cutoffs=(5, 5, 6), omega_m=1.0):
        return cls(ModelKind.TWO_MODES, (omega_c1, omega_c2), (omega_a,), g, (lam,), cutoffs, omega_m)

    @classmethod
    def two_atoms(cls, omega_c, omega_a1, omega_a2, g, lam1, lam2, cutoffs=(6, 6), omega_m=1.0):
        return cls(ModelKind.TWO_ATOMS, (omega_c,), (omega_a1, omega_a2), g, (lam1, lam2), cutoffs, omega_m)

    @property
    def beta(self) -> float:
        return self.g / self.omega_m

    def value(self, axis: str) -> float:
        group, idx = _axis_slot(self, axis)
        if group in ("g", "omega_m"):
            return getattr(self, group)
        return getattr(self, group)[0 if idx is None else idx]

    def with_value(self, axis: str, value: float) -> "ModelParams":
        """Copy with one parameter replaced.  Unindexed axes on multi-valued
        fields (e.g. 'omega_a' on the two-atom model) set every entry."""
        group, idx = _axis_slot(self, axis)
        if group in ("g", "omega_m"):
            return replace(self, **{group: float(value)})
        vals = list(getattr(self, group))
        if idx is None:
            vals = [float(value)] * len(vals)
        else:
            vals[idx] = float(value)
        return replace(self, **{group: tuple(vals)})

    def with_cutoffs(self, cutoffs) -> "ModelParams":
        return replace(self, cutoffs=tuple(int(c) for c in cutoffs))


_AXIS_GROUPS = {"omega_c": "omega_c", "omega_a": "omega_a", "lambda": "lam", "lam": "lam"}


def _axis_slot(p: ModelParams, axis: str):
    if axis in ("g", "omega_m"):
        return axis, None
    base, idx = axis, None
    if axis[-1].isdigit():
        base, idx = axis[:-1], int(axis[-1]) - 1
    if base not in _AXIS_GROUPS:
        raise ValidationError(f"unknown parameter axis {axis!r}")
    group = _AXIS_GROUPS[base]
    if idx is not None and not 0 <= idx < len(getattr(p, group)):
        raise ValidationError(f"axis {axis!r} not defined for {p.kind.value}")
    return group, idx


@dataclass(frozen=True)
class HybridizedModes:
    c: float
    G: float
    Delta: float
    omega_tilde_c1: float
    omega_tilde_c2: float


@dataclass(frozen=True)
class LossRates:
    """Photon (per cavity mode), phonon and atom (per atom) damping rates."""

    kappa: tuple[float, ...]
    gamma: float
    eta: tuple[float, ...]

    def __post_init__(self):
        for name in ("kappa", "eta"):
            val = getattr(self, name)
            object.__setattr__(self, name, (float(val),) if np.isscalar(val) else tuple(float(v) for v in val))
        if min(self.kappa + self.eta + (self.gamma,)) < 0:
            raise ValidationError("loss rates must be non-negative")

    @classmethod
    def uniform(cls, rate: float, p: ModelParams) -> "LossRates":
        return cls((rate,) * len(p.omega_c), rate, (rate,) * len(p.omega_a))


@dataclass(frozen=True)
class CircuitParams:
    g_m: float
    g_c: float
    omega_q: float
    omega_c: float


@dataclass(frozen=True)
class DriveSpec:
    """Mechanical drive F(t) coupling through (b + b^dag).

    For pulses, `normalization` selects the Gaussian envelope: "area" gives
    G(t) = exp(-t^2/2s^2)/(s*sqrt(2 pi)) so that A is the envelope area,
    "peak" gives G(0) = 1 so that A is the peak force.
    """

    kind: str
    A: float
    omega_d: float = 1.0
    sigma: float | None = None
    t0: float | None = None
    normalization: str = "area"

    def __post_init__(self):
        if self.kind not in ("CW", "GaussianPulse"):
            raise ValidationError(f"unknown drive kind {self.kind!r}")
        if self.A < 0 or self.omega_d <= 0:
            raise ValidationError("drive needs A >= 0 and omega_d > 0")
        if self.kind == "GaussianPulse":
            if self.sigma is None or self.sigma <= 0 or self.t0 is None:
                raise ValidationError("a pulse needs sigma > 0 and t0")
            if self.normalization not in ("area", "peak"):
                raise ValidationError(f"unknown pulse normalization {self.normalization!r}")

    @classmethod
    def cw(cls, A, omega_d=1.0):
        return cls("CW", A, omega_d)

    @classmethod
    def pulse(cls, A, sigma, t0, omega_d=1.0, normalization="area"):
        return cls("GaussianPulse", A, omega_d, sigma, t0, normalization)

    def active_interval(self, width: float = 8.0) -> tuple[float, float]:
        """Time span outside which the drive is negligible (|G| < e^-32 of peak)."""
        if self.kind == "CW":
            return (-math.inf, math.inf)
        return (self.t0 - width * self.sigma, self.t0 + width * self.sigma)


@dataclass(frozen=True)
class ModelOperators:
    space: HilbertSpace
    b: np.ndarray
    a: tuple[np.ndarray, ...]
    sm: tuple[np.ndarray, ...]


def model_space(p: ModelParams) -> HilbertSpace:
    n_cav, n_atom, _ = _SHAPES[p.kind]
    cav_labels = ["cavity"] if n_cav == 1 else [f"cavity{i + 1}" for i in range(n_cav)]
    modes = [ModeLadder(p.cutoffs[0], "mech")] + [ModeLadder(c, lab) for c, lab in zip(p.cutoffs[1:], cav_labels)]
    return build_space(modes, n_atom)


def _resolve_space(p: ModelParams, space: HilbertSpace | None) -> HilbertSpace:
    if space is None:
        return model_space(p)
    n_cav, n_atom, _ = _SHAPES[p.kind]
    if space.qubit_count != n_atom or len(space.modes) != n_cav + 1:
        raise SpaceMismatch(f"space with {space.qubit_count} qubits and {len(space.modes)} modes does not fit {p.kind.value}")
    return space


@lru_cache(maxsize=32)
def _sparse_operators(space: HilbertSpace) -> ModelOperators:
    b = sps.csr_matrix(annihilator(space, 0).entries.real)
    a = tuple(sps.csr_matrix(annihilator(space, 1 + i).entries.real) for i in range(len(space.modes) - 1))
    sm = tuple(sps.csr_matrix(qubit_lowering(space, i).entries.real) for i in range(space.qubit_count))
    return ModelOperators(space, b, a, sm)


def _operators(p: ModelParams, space: HilbertSpace | None, sparse: bool) -> ModelOperators:
    ops = _sparse_operators(_resolve_space(p, space))
    if sparse:
        return ops
    return ModelOperators(ops.space, ops.b.toarray(), tuple(x.toarray() for x in ops.a), tuple(x.toarray() for x in ops.sm))


def model_operators(p: ModelParams, space: HilbertSpace | None = None) -> ModelOperators:
    """Dense real matrices of b, the cavity annihilators and the atomic lowering operators."""
    return _operators(p, space, sparse=False)


def _free_part(p: ModelParams, ops: ModelOperators) -> np.ndarray:
    H = p.omega_m * ops.b.T @ ops.b
    for w, a in zip(p.omega_c, ops.a):
        H = H + w * a.T @ a
    for w, s in zip(p.omega_a, ops.sm):
        H = H + w * s.T @ s
    return H


def bare_hamiltonian(p: ModelParams, space: HilbertSpace | None = None) -> OperatorMatrix:
    """Lab-frame Hamiltonian with optomechanical, pair-creation and Rabi terms."""
    ops = _operators(p, space, sparse=True)
    b, g = ops.b, p.g
    xb = b + b.T
    H = _free_part(p, ops)
    if p.kind == ModelKind.TWO_MODES:
        a1, a2 = ops.a
        r = p.omega_c[1] / p.omega_c[0]
        field_sq = (
            (a1 @ a1 + a1.T @ a1.T + 2 * a1.T @ a1)
            + r * (a2 @ a2 + a2.T @ a2.T + 2 * a2.T @ a2)
            - 2 * math.sqrt(r) * (a1 @ a2 + a1.T @ a2.T + a1.T @ a2 + a2.T @ a1)
        )
        H = H + 0.5 * g * field_sq @ xb
        H = H + p.lam[0] * (a1 + a1.T) @ (ops.sm[0] + ops.sm[0].T)
    else:
        (a,) = ops.a
        H = H + g * a.T @ a @ xb + 0.5 * g * (a @ a + a.T @ a.T) @ xb
        for lam, s in zip(p.lam, ops.sm):
            H = H + lam * (a + a.T) @ (s + s.T)
    return OperatorMatrix(ops.space, H.toarray())


def hybridize(p: ModelParams) -> HybridizedModes:
    if p.kind != ModelKind.TWO_MODES:
        raise WrongModel("hybridized modes exist only for the two-cavity-mode model")
    w1, w2 = p.omega_c
    c = math.sqrt(w2 / w1)
    delta = w1 - w2
    c2 = c * c
    return HybridizedModes(c, (1 + c2) * p.g, delta, w2 + delta * c2 / (1 + c2), w2 + delta / (1 + c2))


def hybrid_operators(p: ModelParams, ops: ModelOperators) -> tuple[np.ndarray, np.ndarray]:
    """Matrices of the rotated modes (p, q); q alone carries the pair-creation coupling."""
    c = hybridize(p).c
    a1, a2 = ops.a
    norm = math.sqrt(1 + c * c)
    return (c * a1 + a2) / norm, (a1 - c * a2) / norm


def hybridized_hamiltonian(p: ModelParams, space: HilbertSpace | None = None) -> OperatorMatrix:
    """Two-mode Hamiltonian rewritten in the rotated operators; same matrix as bare_hamiltonian."""
    ops = _operators(p, space, sparse=True)
    hm = hybridize(p)
    pm, qm = hybrid_operators(p, ops)
    b, s = ops.b, ops.sm[0]
    xb = b + b.T
    c2 = hm.c**2
    H = hm.omega_tilde_c1 * pm.T @ pm + hm.omega_tilde_c2 * qm.T @ qm + p.omega_m * b.T @ b + p.omega_a[0] * s.T @ s
    H = H + 0.5 * hm.G * (qm @ qm + qm.T @ qm.T) @ xb + hm.G * qm.T @ qm @ xb
    H = H + p.lam[0] / math.sqrt(1 + c2) * (hm.c * (pm + pm.T) + qm + qm.T) @ (s + s.T)
    H = H + hm.Delta * hm.c / (1 + c2) * (pm.T @ qm + qm.T @ pm)
    return OperatorMatrix(ops.space, H.toarray())


def _pair_series(a: np.ndarray, coupling: float, beta: float, order: int, xm: np.ndarray, xp: np.ndarray) -> np.ndarray:
    """Polaron-frame image of (coupling/2)(a^2 + a^dag^2)(b + b^dag), truncated at `order`."""
    ad = a.T
    na = ad @ a
    out = 0 * na
    xpow = sps.identity(a.shape[0], format="csr")
    prev = None
    for n in range(order + 1):
        sign = (-1) ** n
        term = (ad @ ad + sign * a @ a) @ xpow @ xp
        if n >= 1:
            term = term - n * (ad @ ad - sign * a @ a) @ na @ prev
        out = out + coupling * beta**n * 2.0 ** (n - 1) / math.factorial(n) * term
        prev, xpow = xpow, xpow @ xm
    return out


def _rabi_series(a: np.ndarray, lam: float, sx: np.ndarray, beta: float, order: int, xm: np.ndarray, start: int = 0):
    """Polaron-frame image of lam (a + a^dag) sigma_x, terms n=start..order."""
    out = 0 * sx
    xpow = sps.identity(sx.shape[0], format="csr")
    for _ in range(start):
        xpow = xpow @ xm
    for n in range(start, order + 1):
        out = out + lam * beta**n / math.factorial(n) * (a.T + (-1) ** n * a) @ sx @ xpow
        xpow = xpow @ xm
    return out


def transformed_hamiltonian(p: ModelParams, space: HilbertSpace | None = None, series_order: int = 3) -> OperatorMatrix:
    """Hamiltonian after the polaron transform exp[-beta n (b^dag - b)], series kept to n=series_order.

    For the two-mode model the transform acts on the rotated mode q with
    strength G/omega_m.  The printed series is Hermitian only in the infinite
    space; the truncation corner leaves a small anti-Hermitian remainder, so
    the Hermitian part is returned.
    """
    if series_order < 0:
        raise InvalidOrder(f"series_order must be >= 0, got {series_order}")
    ops = _operators(p, space, sparse=True)
    b = ops.b
    xm, xp = b.T - b, b.T + b
    H = _free_part(p, ops)
    if p.kind == ModelKind.TWO_MODES:
        hm = hybridize(p)
        pm, qm = hybrid_operators(p, ops)
        kappa = hm.G / p.omega_m
        nq = qm.T @ qm
        sx = ops.sm[0] + ops.sm[0].T
        a1 = ops.a[0]
        # rewrite the free photon part in rotated modes; identical to the bare one
        H = H - p.omega_c[0] * a1.T @ a1 - p.omega_c[1] * ops.a[1].T @ ops.a[1]
        H = H + hm.omega_tilde_c1 * pm.T @ pm + hm.omega_tilde_c2 * nq
        H = H - hm.G**2 / p.omega_m * nq @ nq
        H = H + _pair_series(qm, hm.G, kappa, series_order, xm, xp)
        H = H + p.lam[0] * (a1 + a1.T) @ sx
        H = H + _rabi_series(qm, p.lam[0] / math.sqrt(1 + hm.c**2), sx, kappa, series_order, xm, start=1)
        scatter = hm.Delta * hm.c / (1 + hm.c**2)
        xpow = sps.identity(b.shape[0], format="csr")
        for n in range(series_order + 1):
            H = H + scatter * kappa**n / math.factorial(n) * (qm.T @ pm + (-1) ** n * qm @ pm.T) @ xpow
            xpow = xpow @ xm
    else:
        (a,) = ops.a
        na = a.T @ a
        H = H - p.g**2 / p.omega_m * na @ na
        H = H + _pair_series(a, p.g, p.beta, series_order, xm, xp)
        for lam, s in zip(p.lam, ops.sm):
            H = H + _rabi_series(a, lam, s + s.T, p.beta, series_order, xm)
    H = H.toarray()
    return OperatorMatrix(ops.space, 0.5 * (H + H.conj().T))


def drive_term(space: HilbertSpace, mech_index: int = 0) -> OperatorMatrix:
    b = annihilator(space, mech_index)
    return b + b.dag


def drive_amplitude(d: DriveSpec, t):
    """F(t) for a CW tone or a Gaussian-enveloped pulse."""
    t = np.asarray(t, dtype=float)
    carrier = d.A * np.cos(d.omega_d * t)
    if d.kind == "CW":
        return carrier
    env = np.exp(-((t - d.t0) ** 2) / (2 * d.sigma**2))
    if d.normalization == "area":
        env = env / (d.sigma * math.sqrt(2 * math.pi))
    return carrier * env


def charge_qubit_g(c: CircuitParams) -> float:
    """Effective radiation-pressure-like coupling mediated by a charge qubit."""
    detuning = c.omega_q - c.omega_c
    if abs(detuning) < 1e-12:
        raise DegenerateDetuning("qubit and cavity frequencies coincide")
    return 2 * c.g_m * c.g_c**2 / detuning**2
