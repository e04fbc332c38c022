"""Numerics for an atom-cavity system with a vibrating mirror: spectra, effective couplings and open dynamics."""

__version__ = "0.1.0"

from .fockspace import HilbertSpace, ModeLadder, OperatorMatrix, build_space
from .models import DriveSpec, LossRates, ModelKind, ModelParams, bare_hamiltonian, transformed_hamiltonian
from .spectra import eigensolve, find_min_splitting, locate_min_splitting, sweep
from .perturb import CouplingEstimate, displacement_element, rate_rabi_comparison
from .lindblad import Schedule, evolve, spectrum_of

__all__ = [
    "HilbertSpace", "ModeLadder", "OperatorMatrix", "build_space",
    "DriveSpec", "LossRates", "ModelKind", "ModelParams", "bare_hamiltonian", "transformed_hamiltonian",
    "eigensolve", "find_min_splitting", "locate_min_splitting", "sweep",
    "CouplingEstimate", "displacement_element", "rate_rabi_comparison",
    "Schedule", "evolve", "spectrum_of",
]
