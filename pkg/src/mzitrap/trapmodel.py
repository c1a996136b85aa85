"""State-dependent harmonic traps.

Each internal state ``|1>``/``|2>`` sees its own potential
``V(z) = m w^2 z^2 / 2 - F z``. The traps below are immutable value objects;
the helpers are pure functions of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .constants import G_EARTH, HBAR, MASS_RB87

__all__ = [
    "HarmonicTrap1D",
    "Trap3D",
    "TrapPair",
    "PulseConfig",
    "trap_minimum",
    "trap_period",
    "detuning_delta",
    "table1_pair",
    "AXES",
]

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class HarmonicTrap1D:
    """One-dimensional harmonic trap with a constant force.

    Parameters
    ----------
    omega : float
        Angular trap frequency (rad/s).
    force : float
        Constant force F (N) in ``V = m w^2 z^2/2 - F z``.
    mass : float
        Particle mass (kg).
    """

    omega: float
    force: float = 0.0
    mass: float = MASS_RB87

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    @property
    def minimum(self) -> float:
        return trap_minimum(self)

    @property
    def period(self) -> float:
        return trap_period(self)

    @property
    def ground_width(self) -> float:
        """Width sigma = sqrt(hbar / (m w)) of the ground state."""
        return np.sqrt(HBAR / (self.mass * self.omega))

    def potential(self, z):
        return 0.5 * self.mass * self.omega**2 * np.asarray(z) ** 2 - self.force * np.asarray(z)


@dataclass(frozen=True)
class Trap3D:
    """Anisotropic harmonic trap with a force along ``z`` only."""

    omegas: tuple
    force_z: float = 0.0
    mass: float = MASS_RB87

    def __post_init__(self):
        omegas = tuple(float(w) for w in self.omegas)
        if len(omegas) != 3:
            raise ValueError("need exactly three trap frequencies (x, y, z)")
        if not all(w > 0 for w in omegas):
            raise ValueError("all trap frequencies must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        object.__setattr__(self, "omegas", omegas)

    def axis(self, name: str) -> HarmonicTrap1D:
        """The 1D trap along axis ``'x'``, ``'y'`` or ``'z'``."""
        i = AXES.index(name)
        force = self.force_z if name == "z" else 0.0
        return HarmonicTrap1D(self.omegas[i], force, self.mass)

    def potential(self, x, y, z):
        wx, wy, wz = self.omegas
        return (0.5 * self.mass * (wx**2 * np.asarray(x) ** 2 + wy**2 * np.asarray(y) ** 2
                                   + wz**2 * np.asarray(z) ** 2)
                - self.force_z * np.asarray(z))


@dataclass(frozen=True)
class TrapPair:
    """Traps seen by the two internal states."""

    trap1: Trap3D
    trap2: Trap3D

    def __post_init__(self):
        if self.trap1.mass != self.trap2.mass:
            raise ValueError("both states must share the same mass")
        sep = self.separation
        if not np.isfinite(sep):
            raise ValueError("trap separation must be finite")

    @property
    def mass(self) -> float:
        return self.trap1.mass

    @property
    def separation(self) -> float:
        """Signed distance ``z0_2 - z0_1`` of the trap minima along z."""
        return trap_minimum(self.trap2.axis("z")) - trap_minimum(self.trap1.axis("z"))

    def state(self, index: int) -> Trap3D:
        if index == 1:
            return self.trap1
        if index == 2:
            return self.trap2
        raise ValueError("state index must be 1 or 2")

    def with_forces(self, force1: float, force2: float) -> "TrapPair":
        return TrapPair(replace(self.trap1, force_z=force1), replace(self.trap2, force_z=force2))


@dataclass(frozen=True)
class PulseConfig:
    """Rabi drive parameters for box-shaped pulses.

    ``phase_schedule(t, T)`` returns the pulse phase at time ``t`` for an
    interferometer with pulse separation ``T``; the default is zero.
    """

    rabi_frequency: float
    drive_frequency: float = 0.0
    bare_splitting: float = 0.0
    phase_schedule: Optional[Callable[[float, float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.rabi_frequency > 0:
            raise ValueError("rabi_frequency must be positive")

    @property
    def tau_half_pi(self) -> float:
        return np.pi / (2 * self.rabi_frequency)

    @property
    def tau_pi(self) -> float:
        return np.pi / self.rabi_frequency

    def phase(self, t: float, T: float) -> float:
        if self.phase_schedule is None:
            return 0.0
        return float(self.phase_schedule(t, T))


def trap_minimum(trap: HarmonicTrap1D) -> float:
    """Position ``F / (m w^2)`` of the potential minimum."""
    return trap.force / (trap.mass * trap.omega**2)


def trap_period(trap: HarmonicTrap1D) -> float:
    """Oscillation period ``2 pi / w``."""
    return 2 * np.pi / trap.omega


def detuning_delta(pair: TrapPair) -> float:
    """Largest position-dependent detuning seen by the moving wavepacket.

    Evaluates ``2 (F2 w1^2 - F1 w2^2)^2 / (hbar m w1^4 w2^2)`` with the z-axis
    frequencies and forces of both traps.
    """
    t1, t2 = pair.trap1.axis("z"), pair.trap2.axis("z")
    w1, w2, F1, F2, m = t1.omega, t2.omega, t1.force, t2.force, pair.mass
    return 2 * (F2 * w1**2 - F1 * w2**2) ** 2 / (HBAR * m * w1**4 * w2**2)


def table1_pair(g_factor: float = 0.1, *, mass: float = MASS_RB87,
                transversal: bool = True) -> TrapPair:
    """The reference two-state trap (100 Hz and 100/sqrt(2) Hz along z).

    Parameters
    ----------
    g_factor : float
        Applied acceleration in units of 9.81 m/s^2; both states feel
        ``F = -m g``.
    transversal : bool
        If False the transversal frequencies are made equal between the two
        states, which switches off transversal breathing.
    """
    two_pi = 2 * np.pi
    wz2 = two_pi * 100.0
    wx2 = two_pi * 177.77
    wy2 = two_pi * 277.77
    s = np.sqrt(2.0)
    force = -mass * g_factor * G_EARTH
    trap2 = Trap3D((wx2, wy2, wz2), force, mass)
    if transversal:
        trap1 = Trap3D((wx2 / s, wy2 / s, wz2 / s), force, mass)
    else:
        trap1 = Trap3D((wx2, wy2, wz2 / s), force, mass)
    return TrapPair(trap1, trap2)
