"""Matter-wave interferometry of atoms in state-dependent traps.

Analytic Gaussian-packet model, optical-dipole-trap characterization, grid
wave simulation, and frequency/anharmonicity extraction from interferograms.
"""

from . import constants, dipole, errors, extraction, gaussian, mzi, pipeline, trapmodel, wave
from .dipole import DipoleTrapConfig, LocalTrapCharacterization, characterize, reference_dipole_config
from .errors import MziTrapError
from .mzi import Interferogram, MziConfig, scan, signal_1d, signal_3d
from .trapmodel import HarmonicTrap1D, PulseConfig, Trap3D, TrapPair, table1_pair

__version__ = "0.1.0"

__all__ = [
    "constants", "dipole", "errors", "extraction", "gaussian", "mzi", "pipeline", "trapmodel", "wave",
    "DipoleTrapConfig", "LocalTrapCharacterization", "characterize", "reference_dipole_config",
    "MziTrapError", "Interferogram", "MziConfig", "scan", "signal_1d", "signal_3d",
    "HarmonicTrap1D", "PulseConfig", "Trap3D", "TrapPair", "table1_pair", "__version__",
]
