"""Physical constants and atomic data used throughout the package.

All values are SI. The Earth acceleration is pinned to 9.81 m/s^2 (not the
CODATA standard gravity) so that the reference trap numbers reproduce.

Rb-87 D-line data follow D. A. Steck, "Rubidium 87 D Line Data" (rev. 2.2.1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants as _sc

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "HBAR",
    "G_EARTH",
    "MASS_RB87",
    "SPEED_OF_LIGHT",
    "RB87_D1_WAVELENGTH",
    "RB87_D2_WAVELENGTH",
    "RB87_D1_LINEWIDTH",
    "RB87_D2_LINEWIDTH",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """Bundle of the constants entering the trap and interferometer models."""

    hbar: float = _sc.hbar
    g_earth: float = 9.81
    mass_rb87: float = 1.44316060e-25
    speed_of_light: float = _sc.c

    def __post_init__(self):
        for name in ("hbar", "g_earth", "mass_rb87", "speed_of_light"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


CONSTANTS = PhysicalConstants()

HBAR = CONSTANTS.hbar
G_EARTH = CONSTANTS.g_earth
MASS_RB87 = CONSTANTS.mass_rb87
SPEED_OF_LIGHT = CONSTANTS.speed_of_light

# vacuum wavelengths (m) and natural linewidths (rad/s)
RB87_D1_WAVELENGTH = 794.978851156e-9
RB87_D2_WAVELENGTH = 780.241209686e-9
RB87_D1_LINEWIDTH = 2 * np.pi * 5.7500e6
RB87_D2_LINEWIDTH = 2 * np.pi * 6.0666e6
