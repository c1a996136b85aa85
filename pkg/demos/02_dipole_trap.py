"""Local parameters of a crossed 1064 nm dipole trap holding Rb-87.

Gravity pulls the atoms below the beam focus. The sag position follows
from the principal branch of the Lambert W function, and the harmonic
frequencies and the cubic and quartic coefficients follow in closed form.
Each closed form is cross-checked against finite differences of the full
potential. The amplitude-dependent oscillation frequency is then compared
between the classical period integral and its perturbative expansion.

Run with ``python demos/02_dipole_trap.py``.
"""

import numpy as np

from mzitrap.constants import G_EARTH
from mzitrap.dipole import (
    axial_potential,
    characterize,
    classical_period,
    reference_dipole_config,
    perturbative_frequency,
)

cfg = reference_dipole_config()
print(f"polarizability factor kappa = {cfg.kappa:.4e} (negative: red detuned)")

for g in (1.0, 0.9, 0.8, 0.7):
    r = characterize(cfg, g * G_EARTH)
    worst = max(r.max_relative_mismatch().values())
    print(f"g = {g:.2f} g_E: z0 = {r.z0 * 1e6:8.4f} um, omega_x/2pi = {r.omega_x / (2 * np.pi):7.3f} Hz, "
          f"omega_z/2pi = {r.omega_z / (2 * np.pi):8.4f} Hz, alpha = {r.alpha:.3e}, beta = {r.beta:.3e} "
          f"(max closed-form vs numeric mismatch {worst:.1e})")

# oscillation frequency of state |1> launched from the state-|2> minimum
r1 = characterize(cfg)
V = axial_potential(cfg)
for g2 in (0.9, 0.8, 0.7):
    z2 = characterize(cfg, g2 * G_EARTH).z0
    E = float(V(z2))
    exact = 2 * np.pi / classical_period(V, E, cfg.mass, z_min=r1.z0, scale=0.1 * abs(z2 - r1.z0))
    approx = perturbative_frequency(r1.omega_z, r1.alpha, r1.beta, abs(z2 - r1.z0))
    print(f"dz = {abs(z2 - r1.z0) * 1e6:.3f} um: classical {exact / (2 * np.pi):.4f} Hz, "
          f"perturbative {approx / (2 * np.pi):.4f} Hz, harmonic {r1.omega_z / (2 * np.pi):.4f} Hz")
