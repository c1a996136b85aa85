"""Grid-based two-level Schroedinger solver and interferometer simulation."""

from .grid import Grid, SpinorField, gaussian_amplitude, norm, normalized, population
from .mzi import (
    MziWaveConfig,
    WaveMziResult,
    harmonic_potential,
    run_mzi,
    scan_instant_spectral,
    scan_wave,
    transversal_factor,
)
from .propagate import (
    SplitStepper,
    apply_instant_pulse,
    energy_expectation,
    ground_state,
    local_propagator,
    split_step_evolve,
)
from .spectral import SpectralPropagator, fourier_hamiltonian, instant_mzi_overlap

__all__ = [
    "Grid", "SpinorField", "gaussian_amplitude", "norm", "normalized", "population",
    "MziWaveConfig", "WaveMziResult", "harmonic_potential", "run_mzi", "scan_instant_spectral",
    "scan_wave", "transversal_factor", "SplitStepper", "apply_instant_pulse",
    "energy_expectation", "ground_state", "local_propagator", "split_step_evolve",
    "SpectralPropagator", "fourier_hamiltonian", "instant_mzi_overlap",
]
