"""Truncated tensor-product Hilbert spaces and elementary operators.

Subsystem order is fixed: qubits first, then bosonic modes in the order given.
Qubit basis index 0 is the ground state |g>, index 1 the excited state |e>.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from itertools import product

import numpy as np

from .errors import DimensionOverflow, IndexOutOfRange, InvalidCutoff, SpaceMismatch

DEFAULT_DIM_CEILING = 20000
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class ModeLadder:
    """One truncated bosonic mode; Fock levels 0..cutoff are kept."""

    cutoff: int
    label: str = ""

    @property
    def dim(self) -> int:
        return self.cutoff + 1


@dataclass(frozen=True)
class HilbertSpace:
    modes: tuple[ModeLadder, ...]
    qubit_count: int
    subsystem_dims: tuple[int, ...] = field(init=False)
    dim: int = field(init=False)

    def __post_init__(self):
        dims = (2,) * self.qubit_count + tuple(m.dim for m in self.modes)
        object.__setattr__(self, "subsystem_dims", dims)
        object.__setattr__(self, "dim", int(np.prod(dims, dtype=np.int64)) if dims else 1)

    def occupations(self, index: int) -> tuple[int, ...]:
        """Subsystem occupation numbers of basis state `index`."""
        if not 0 <= index < self.dim:
            raise IndexOutOfRange(f"basis index {index} outside 0..{self.dim - 1}")
        return tuple(int(i) for i in np.unravel_index(index, self.subsystem_dims))

    def index_of(self, occupations) -> int:
        occ = tuple(occupations)
        if len(occ) != len(self.subsystem_dims):
            raise IndexOutOfRange(f"expected {len(self.subsystem_dims)} occupations, got {len(occ)}")
        for n, d in zip(occ, self.subsystem_dims):
            if not 0 <= n < d:
                raise IndexOutOfRange(f"occupation {occ} outside truncated space")
        return int(np.ravel_multi_index(occ, self.subsystem_dims))

    def label(self, index: int) -> str:
        """Human-readable ket such as |g,1,0>."""
        occ = self.occupations(index)
        atoms = ["e" if j else "g" for j in occ[: self.qubit_count]]
        return "|" + ",".join(atoms + [str(n) for n in occ[self.qubit_count :]]) + ">"

    def labels(self) -> list[str]:
        return [self.label(i) for i in range(self.dim)]

    def parse_label(self, label) -> int:
        """Basis index of a ket given as '|g,1,0>' or as a tuple like ('g', 1, 0)."""
        return self.index_of(parse_occupations(label, self.qubit_count))

    def basis_state(self, label) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.parse_label(label)] = 1.0
        return vec

    def iter_occupations(self):
        return product(*(range(d) for d in self.subsystem_dims))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense operator bound to a HilbertSpace; arithmetic checks space identity."""

    space: HilbertSpace
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise SpaceMismatch(f"matrix shape {m.shape} does not match dim {self.space.dim}")
        object.__setattr__(self, "entries", m)

    def _check(self, other: "OperatorMatrix"):
        if other.space != self.space:
            raise SpaceMismatch("operators live on different Hilbert spaces")

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.space, self.entries + other.entries)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.space, self.entries - other.entries)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.space, self.entries @ other.entries)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return OperatorMatrix(self.space, self.entries * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return OperatorMatrix(self.space, -self.entries)

    def __truediv__(self, scalar):
        return OperatorMatrix(self.space, self.entries / scalar)

    def __pow__(self, n: int):
        return OperatorMatrix(self.space, np.linalg.matrix_power(self.entries, n))

    @property
    def dag(self) -> "OperatorMatrix":
        return adjoint(self)

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_residual() < tol


def parse_occupations(label, qubit_count: int) -> tuple[int, ...]:
    """Occupation numbers of a ket label; atoms are written g/e (or 0/1)."""
    if isinstance(label, str):
        parts = [s.strip() for s in label.strip().strip("|<>").split(",")]
    else:
        parts = list(label)
    occ = []
    for i, part in enumerate(parts):
        if i < qubit_count:
            key = str(part).lower()
            if key not in ("g", "e", "0", "1"):
                raise IndexOutOfRange(f"qubit entry {part!r} must be g or e")
            occ.append(1 if key in ("e", "1") else 0)
        else:
            occ.append(int(part))
    return tuple(occ)


def build_space(modes, qubit_count: int = 0, ceiling: int = DEFAULT_DIM_CEILING) -> HilbertSpace:
    """Assemble a truncated space; bosonic modes follow the qubits."""
    if qubit_count < 0:
        raise InvalidCutoff("qubit_count must be non-negative")
    modes = tuple(m if isinstance(m, ModeLadder) else ModeLadder(int(m)) for m in modes)
    for m in modes:
        if m.cutoff < 1:
            raise InvalidCutoff(f"mode {m.label or '?'} has cutoff {m.cutoff}; need at least 1")
    dim = 2**qubit_count * int(np.prod([m.dim for m in modes], dtype=np.int64))
    if dim > ceiling:
        raise DimensionOverflow(f"dimension {dim} exceeds ceiling {ceiling}")
    return HilbertSpace(modes, qubit_count)


def _embed(space: HilbertSpace, slot: int, local: np.ndarray) -> np.ndarray:
    factors = [np.eye(d) for d in space.subsystem_dims]
    factors[slot] = local
    return reduce(np.kron, factors, np.ones((1, 1)))


def ladder_matrix(cutoff: int) -> np.ndarray:
    """Single-mode annihilation matrix with <n-1|a|n> = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1)


def annihilator(space: HilbertSpace, mode_index: int) -> OperatorMatrix:
    if not 0 <= mode_index < len(space.modes):
        raise IndexOutOfRange(f"mode index {mode_index} not in 0..{len(space.modes) - 1}")
    local = ladder_matrix(space.modes[mode_index].cutoff)
    return OperatorMatrix(space, _embed(space, space.qubit_count + mode_index, local))


def qubit_lowering(space: HilbertSpace, qubit_index: int) -> OperatorMatrix:
    if not 0 <= qubit_index < space.qubit_count:
        raise IndexOutOfRange(f"qubit index {qubit_index} not in 0..{space.qubit_count - 1}")
    sigma_minus = np.array([[0.0, 1.0], [0.0, 0.0]])
    return OperatorMatrix(space, _embed(space, qubit_index, sigma_minus))


def number_operator(space: HilbertSpace, mode_index: int) -> OperatorMatrix:
    a = annihilator(space, mode_index)
    return a.dag @ a


def identity(space: HilbertSpace) -> OperatorMatrix:
    return OperatorMatrix(space, np.eye(space.dim))


def adjoint(op: OperatorMatrix) -> OperatorMatrix:
    return OperatorMatrix(op.space, op.entries.conj().T)


def expectation(op: OperatorMatrix, state) -> complex:
    """<psi|O|psi> for a ket, or tr(O rho) for a density matrix."""
    state = np.asarray(state, dtype=complex)
    d = op.space.dim
    if state.ndim == 1:
        if state.shape[0] != d:
            raise SpaceMismatch(f"state length {state.shape[0]} does not match dim {d}")
        return complex(np.vdot(state, op.entries @ state))
    if state.shape != (d, d):
        raise SpaceMismatch(f"density matrix shape {state.shape} does not match dim {d}")
    return complex(np.einsum("ij,ji->", op.entries, state))
