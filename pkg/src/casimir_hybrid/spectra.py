"""Diagonalization, level tracking and avoided-crossing search."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .errors import IndexOutOfRange, NoBracketedMinimum, NoConvergence, NotHermitian, WrongModel
from .fockspace import HilbertSpace, OperatorMatrix, parse_occupations
from .models import ModelKind, ModelParams, bare_hamiltonian, model_space

HERMITIAN_INPUT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EigenSolution:
    values: np.ndarray
    vectors: np.ndarray
    space: HilbertSpace

    def gap(self, i: int) -> float:
        return float(self.values[i + 1] - self.values[i])

    def relative(self) -> np.ndarray:
        """Energies measured from the ground state."""
        return self.values - self.values[0]


@dataclass(frozen=True, eq=False)
class SpectrumSweep:
    axis_name: str
    axis_values: np.ndarray
    tracked_levels: np.ndarray  # (level, point), E_i - E_0
    overlap_continuity: np.ndarray  # smallest assigned overlap at each point
    eigen_indices: np.ndarray  # (level, point) index into the sorted spectrum


@dataclass(frozen=True)
class CrossingReport:
    level_pair: tuple[int, int]
    axis_name: str
    axis_value_at_min: float
    splitting: float
    state_composition: tuple[tuple[tuple[str, complex], ...], tuple[tuple[str, complex], ...]]
    resonance_order: int
    energies: tuple[float, float]  # both levels, measured from the ground state


def eigensolve(H: OperatorMatrix) -> EigenSolution:
    m = H.entries
    if not np.all(np.isfinite(m)):
        raise NotHermitian("matrix has non-finite entries")
    res = float(np.max(np.abs(m - m.conj().T), initial=0.0))
    if res > HERMITIAN_INPUT_TOL:
        raise NotHermitian(f"Hermiticity residual {res:.3e} exceeds {HERMITIAN_INPUT_TOL}")
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return EigenSolution(values, vectors, H.space)


def eigen_residual(H: OperatorMatrix, sol: EigenSolution) -> float:
    """max|Hv - Ev| scaled by max|E|."""
    r = H.entries @ sol.vectors - sol.vectors * sol.values
    return float(np.max(np.abs(r)) / max(np.max(np.abs(sol.values)), 1e-300))


def _solve_at(p: ModelParams, axis: str, x: float, space, hamiltonian) -> EigenSolution:
    return eigensolve(hamiltonian(p.with_value(axis, x), space))


def sweep(
    p: ModelParams,
    axis: str,
    grid,
    n_levels: int,
    *,
    space: HilbertSpace | None = None,
    hamiltonian: Callable = bare_hamiltonian,
    threads: int | None = None,
    spare: int = 4,
) -> SpectrumSweep:
    """Spectrum along `grid`, levels followed by eigenvector overlap.

    At each step the tracked states are matched to the lowest n_levels+spare
    eigenvectors of the next point by maximum total overlap (Hungarian
    assignment); near-equal overlaps are settled by energy proximity.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing with at least 2 points")
    space = space or model_space(p)
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            sols = list(pool.map(lambda x: _solve_at(p, axis, x, space, hamiltonian), grid))
    else:
        sols = [_solve_at(p, axis, x, space, hamiltonian) for x in grid]

    pool_size = min(space.dim, n_levels + spare)
    idx = np.zeros((n_levels, len(grid)), dtype=int)
    idx[:, 0] = np.arange(n_levels)
    continuity = np.ones(len(grid))
    for j in range(1, len(grid)):
        prev_vecs = sols[j - 1].vectors[:, idx[:, j - 1]]
        prev_e = sols[j - 1].values[idx[:, j - 1]]
        cand = sols[j].vectors[:, :pool_size]
        overlap = np.abs(prev_vecs.conj().T @ cand) ** 2
        de = np.abs(prev_e[:, None] - sols[j].values[None, :pool_size])
        rows, cols = linear_sum_assignment(-(overlap - 1e-9 * de / (1.0 + de)))
        idx[rows, j] = cols
        continuity[j] = overlap[rows, cols].min()
    levels = np.array([[sols[j].values[idx[i, j]] - sols[j].values[0] for j in range(len(grid))] for i in range(n_levels)])
    return SpectrumSweep(axis, grid, levels, continuity, idx)


def gap_at(p: ModelParams, axis: str, x: float, level_pair, space=None, hamiltonian=bare_hamiltonian) -> float:
    i, j = level_pair
    vals = np.linalg.eigvalsh(hamiltonian(p.with_value(axis, x), space).entries)
    return float(vals[j] - vals[i])


def find_min_splitting(
    p: ModelParams,
    axis: str,
    bracket,
    level_pair=(3, 4),
    *,
    space: HilbertSpace | None = None,
    hamiltonian: Callable = bare_hamiltonian,
    prescan: int = 101,
    xtol: float = 1e-8,
    top_k: int = 4,
) -> CrossingReport:
    """Locate the minimum of E_j - E_i inside `bracket` by golden-section search.

    A `prescan`-point scan must show exactly one interior local minimum.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise NoBracketedMinimum("bracket must satisfy lo < hi")
    space = space or model_space(p)
    xs = np.linspace(lo, hi, prescan)
    gaps = np.array([gap_at(p, axis, x, level_pair, space, hamiltonian) for x in xs])
    interior = np.flatnonzero((gaps[1:-1] < gaps[:-2]) & (gaps[1:-1] <= gaps[2:])) + 1
    k = int(np.argmin(gaps))
    if len(interior) != 1 or interior[0] != k:
        raise NoBracketedMinimum(
            f"pre-scan of {axis} in [{lo}, {hi}] found {len(interior)} interior minima of the level-{level_pair} gap"
        )
    x_mid = xs[k]
    res = minimize_scalar(
        lambda x: gap_at(p, axis, x, level_pair, space, hamiltonian),
        bracket=(xs[k - 1], x_mid, xs[k + 1]),
        method="golden",
        options={"xtol": xtol / (2 * max(abs(x_mid), 1e-300))},
    )
    x_min = float(res.x)
    sol = eigensolve(hamiltonian(p.with_value(axis, x_min), space))
    i, j = level_pair
    comp = (tuple(state_composition(sol, i, top_k)), tuple(state_composition(sol, j, top_k)))
    rel = sol.relative()
    return CrossingReport(
        (i, j), axis, x_min, sol.gap(i) if j == i + 1 else float(sol.values[j] - sol.values[i]),
        comp, _resonance_order(sol, (i, j)), (float(rel[i]), float(rel[j])),
    )


def state_composition(sol: EigenSolution, level: int, top_k: int = 4) -> list[tuple[str, complex]]:
    """Largest bare-basis amplitudes of one eigenstate, phase fixed so the leading one is real positive."""
    if not 0 <= level < len(sol.values):
        raise IndexOutOfRange(f"level {level} not in 0..{len(sol.values) - 1}")
    vec = sol.vectors[:, level]
    order = np.argsort(-np.abs(vec), kind="stable")[:top_k]
    lead = vec[order[0]]
    phase = np.conj(lead) / abs(lead)
    return [(sol.space.label(int(n)), complex(vec[n] * phase)) for n in order]


def _resonance_order(sol: EigenSolution, pair) -> int:
    """Phonon-number difference between the two dominant bare states of a hybridized pair."""
    weights = np.abs(sol.vectors[:, pair[0]]) ** 2 + np.abs(sol.vectors[:, pair[1]]) ** 2
    top = np.argsort(-weights)[:2]
    slot = sol.space.qubit_count  # mechanical mode follows the atoms
    k = [sol.space.occupations(int(n))[slot] for n in top]
    return abs(k[0] - k[1])


def unperturbed_energy(p: ModelParams, labels) -> float:
    """Closed-form energy of a bare ket in the polaron frame (Kerr-shifted ladder)."""
    n_atoms = len(p.omega_a)
    occ = parse_occupations(labels, n_atoms)
    if len(occ) != n_atoms + 1 + len(p.omega_c):
        raise WrongModel(f"label {labels!r} does not fit {p.kind.value}")
    g2 = p.g**2 / p.omega_m
    if p.kind == ModelKind.SINGLE:
        j, k, n = occ
        return p.omega_c[0] * n + p.omega_m * k + p.omega_a[0] * j - g2 * n * n
    if p.kind == ModelKind.TWO_ATOMS:
        j1, j2, k, n = occ
        return p.omega_c[0] * n + p.omega_m * k + p.omega_a[0] * j1 + p.omega_a[1] * j2 - g2 * n * n
    if p.kind == ModelKind.TWO_MODES:
        j, k, n1, n2 = occ
        c2 = p.omega_c[1] / p.omega_c[0]
        kerr = n1 * n1 + 2 * c2 * n1 * n2 + c2 * c2 * n2 * n2 + c2 * n1 * (n2 + 1) + c2 * n2 * (n1 + 1)
        return p.omega_c[0] * n1 + p.omega_c[1] * n2 + p.omega_m * k + p.omega_a[0] * j - g2 * kerr
    raise WrongModel(f"no closed-form energy for {p.kind}")


def locate_min_splitting(
    p: ModelParams,
    axis: str,
    span,
    level_pair=(3, 4),
    *,
    points: int = 201,
    space: HilbertSpace | None = None,
    hamiltonian: Callable = bare_hamiltonian,
    **kw,
) -> CrossingReport:
    """Global minimum of the gap over a wide `span`: coarse scan, then golden search around the best point."""
    space = space or model_space(p)
    xs = np.linspace(float(span[0]), float(span[1]), points)
    gaps = [gap_at(p, axis, x, level_pair, space, hamiltonian) for x in xs]
    k = int(np.clip(np.argmin(gaps), 1, points - 2))
    return find_min_splitting(p, axis, (xs[k - 1], xs[k + 1]), level_pair, space=space, hamiltonian=hamiltonian, **kw)


def numeric_splitting(p: ModelParams, axis: str, center: float, half_width: float, level_pair, **kw) -> CrossingReport:
    """find_min_splitting on a symmetric bracket around `center`."""
    return find_min_splitting(p, axis, (center - half_width, center + half_width), level_pair, **kw)


def lipschitz_bound(p: ModelParams, axis: str, space=None, hamiltonian=bare_hamiltonian, h: float = 1e-6) -> float:
    """Spectral-norm bound on |dE/dx| from a finite-difference parameter derivative of H."""
    x = p.value(axis)
    dH = (hamiltonian(p.with_value(axis, x + h), space).entries - hamiltonian(p.with_value(axis, x - h), space).entries) / (2 * h)
    return float(np.linalg.norm(dH, 2)) * 2  # E_i - E_0 moves at most twice as fast as any single level


def levels_near(sol: EigenSolution, energy: float, count: int = 2) -> list[int]:
    """Indices of the `count` levels (E - E0) closest to `energy`, sorted."""
    rel = sol.relative()
    return sorted(int(i) for i in np.argsort(np.abs(rel - energy))[:count])


def label_weight(sol: EigenSolution, level: int, label) -> float:
    return float(abs(sol.vectors[sol.space.parse_label(label), level]) ** 2)

