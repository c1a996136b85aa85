"""Crossed optical dipole trap under gravity.

Two Gaussian beams with equal power, waist and wavelength propagate along
``x`` and ``y`` with foci at the origin. Gravity (or an effective
acceleration) along ``-z`` sags the minimum to ``(0, 0, z0)``; around that
point the trap is characterized by harmonic frequencies plus cubic and
quartic Taylor coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .constants import (
    G_EARTH,
    HBAR,
    MASS_RB87,
    RB87_D1_LINEWIDTH,
    RB87_D1_WAVELENGTH,
    RB87_D2_LINEWIDTH,
    RB87_D2_WAVELENGTH,
    SPEED_OF_LIGHT,
)
from .errors import NoMinimum, OutOfDomain, ResonanceSingularity, Unbound

__all__ = [
    "DLineData",
    "RB87_DLINES",
    "DipoleTrapConfig",
    "LocalTrapCharacterization",
    "lambert_w0",
    "kappa",
    "beam_intensity",
    "dipole_potential",
    "sag_z0",
    "characterize",
    "axial_potential",
    "classical_period",
    "turning_points",
    "perturbative_frequency",
    "harmonic_amplitude",
    "reference_dipole_config",
]

_INV_E = np.exp(-1.0)


def lambert_w0(x):
    """Principal branch of the Lambert W function for real ``x >= -1/e``.

    Halley iteration started from the branch-point series near ``-1/e``,
    ``log1p`` for moderate arguments and the asymptotic ``log x - log log x``
    for large ones.

    Raises
    ------
    OutOfDomain
        If any ``x < -1/e``.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    # -1/e is not representable; allow a few ulps of slack below it
    if np.any(x_arr < -_INV_E * (1 + 4 * np.finfo(float).eps)) or np.any(np.isnan(x_arr)):
        raise OutOfDomain("lambert_w0 is real only for x >= -1/e")
    out = np.empty_like(x_arr)
    for i, xi in enumerate(x_arr):
        out[i] = _lambert_scalar(xi)
    return float(out[0]) if scalar else out


def _lambert_scalar(x: float) -> float:
    if x == 0.0:
        return 0.0
    if np.isinf(x):
        return np.inf
    if x <= -_INV_E:
        return -1.0
    p2 = 2.0 * (np.e * x + 1.0)
    if p2 < 0.5:
        p = np.sqrt(p2)
        w = -1.0 + p - p2 / 3.0 + 11.0 / 72.0 * p * p2
    elif x < 3.0:
        w = np.log1p(x) * (1.0 - 0.1 * np.log1p(x)) if x > 0 else 0.5 * np.log1p(2 * x)
    else:
        lx = np.log(x)
        w = lx - np.log(lx)
    for _ in range(64):
        ew = np.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_new = w - dw
        if abs(dw) <= 4 * np.finfo(float).eps * (1.0 + abs(w_new)):
            w = w_new
            break
        w = w_new
    return float(w)


@dataclass(frozen=True)
class DLineData:
    """Transition frequency and linewidth of the D1 and D2 lines (rad/s)."""

    omega_d1: float
    gamma_d1: float
    omega_d2: float
    gamma_d2: float

    def __post_init__(self):
        if not (self.omega_d2 > self.omega_d1 > 0):
            raise ValueError("expected omega_D2 > omega_D1 > 0")
        if not (self.gamma_d1 > 0 and self.gamma_d2 > 0):
            raise ValueError("linewidths must be positive")

    @classmethod
    def from_wavelengths(cls, lambda_d1, gamma_d1, lambda_d2, gamma_d2):
        two_pi_c = 2 * np.pi * SPEED_OF_LIGHT
        return cls(two_pi_c / lambda_d1, gamma_d1, two_pi_c / lambda_d2, gamma_d2)


RB87_DLINES = DLineData.from_wavelengths(
    RB87_D1_WAVELENGTH, RB87_D1_LINEWIDTH, RB87_D2_WAVELENGTH, RB87_D2_LINEWIDTH
)


def kappa(atom: DLineData, wavelength: float) -> float:
    """Scalar polarizability factor such that ``V = hbar kappa I / 8``.

    Weighted D-line sum ``(kappa_D1 + 2 kappa_D2) / 3``; negative for light
    red-detuned from both lines.
    """
    c = SPEED_OF_LIGHT
    w = 2 * np.pi * c / wavelength

    def line(wd, gd):
        if w == wd:
            raise ResonanceSingularity("laser frequency equals a D-line resonance")
        return 12 * np.pi * c**2 / (HBAR * wd**3) * (gd / (w - wd) - gd / (w + wd))

    return (line(atom.omega_d1, atom.gamma_d1) + 2 * line(atom.omega_d2, atom.gamma_d2)) / 3


@dataclass(frozen=True)
class DipoleTrapConfig:
    """Crossed dipole trap with two identical beams along ``x`` and ``y``.

    ``gravity`` is the acceleration pulling along ``-z``; the potential
    contains ``+ m g z``.
    """

    power: float = 1.0
    waist: float = 100e-6
    wavelength: float = 1064e-9
    mass: float = MASS_RB87
    atom: DLineData = RB87_DLINES
    gravity: float = G_EARTH

    def __post_init__(self):
        if not (self.power > 0 and self.waist > 0 and self.wavelength > 0):
            raise ValueError("power, waist and wavelength must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    @property
    def kappa(self) -> float:
        return kappa(self.atom, self.wavelength)

    @property
    def rayleigh_range(self) -> float:
        return np.pi * self.waist**2 / self.wavelength

    def with_gravity(self, g: float) -> "DipoleTrapConfig":
        return replace(self, gravity=g)


def reference_dipole_config(gravity: float = G_EARTH) -> DipoleTrapConfig:
    """1064 nm, 1 W, 100 um beams holding Rb-87."""
    return DipoleTrapConfig(gravity=gravity)


def beam_intensity(power, waist, rayleigh, along, r_perp_sq):
    """Gaussian-beam intensity at axial coordinate ``along`` and radius^2."""
    spread = 1.0 + along**2 / rayleigh**2
    return 2 * power / (np.pi * waist**2 * spread) * np.exp(-2 * r_perp_sq / (waist**2 * spread))


def dipole_potential(config: DipoleTrapConfig, x, y, z, gravity: Optional[float] = None):
    """Total potential energy (J) at ``(x, y, z)``.

    ``gravity`` overrides ``config.gravity`` (used for the second internal
    state, which feels a different effective acceleration).
    """
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    g = config.gravity if gravity is None else gravity
    P, w, R = config.power, config.waist, config.rayleigh_range
    Ix = beam_intensity(P, w, R, x, y**2 + z**2)
    Iy = beam_intensity(P, w, R, y, x**2 + z**2)
    return HBAR * config.kappa * (Ix + Iy) / 8 + config.mass * g * z


def axial_potential(config: DipoleTrapConfig, gravity: Optional[float] = None) -> Callable:
    """``V(0, 0, z)`` as a function of ``z``."""
    def V(z):
        return dipole_potential(config, 0.0, 0.0, z, gravity)
    return V


def _lambert_argument(config: DipoleTrapConfig, g: float) -> float:
    k = config.kappa
    return -(g * config.mass * np.pi) ** 2 * config.waist**6 / (HBAR * k * config.power) ** 2


def sag_z0(config: DipoleTrapConfig, gravity: Optional[float] = None) -> float:
    """Position of the potential minimum on the z axis.

    Raises
    ------
    NoMinimum
        If gravity exceeds the maximum restoring force of the beams.
    """
    g = config.gravity if gravity is None else gravity
    if config.kappa >= 0:
        raise NoMinimum("blue-detuned light does not trap at the focus")
    arg = _lambert_argument(config, g)
    if arg <= -_INV_E:
        raise NoMinimum("the optical potential cannot hold against this acceleration")
    return -0.5 * config.waist * np.sqrt(-lambert_w0(arg)) * np.sign(g) if g != 0 else 0.0


@dataclass(frozen=True)
class LocalTrapCharacterization:
    """Harmonic frequencies and anharmonic coefficients around ``z0``.

    ``numeric`` holds the same quantities from finite differences of the
    potential, for cross-checking the closed forms.
    """

    z0: float
    omega_x: float
    omega_y: float
    omega_z: float
    alpha: float
    beta: float
    gravity: float
    numeric: Dict[str, float] = field(default_factory=dict, compare=False)

    def max_relative_mismatch(self) -> Dict[str, float]:
        out = {}
        for key, val in self.numeric.items():
            ref = getattr(self, key)
            out[key] = abs(val - ref) / abs(ref) if ref != 0 else abs(val)
        return out


# central-difference stencils on 9 points (offsets -4..4), O(h^6)..O(h^4)
_D2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
_D3 = np.array([-7 / 240, 3 / 10, -169 / 120, 61 / 30, 0.0, -61 / 30, 169 / 120, -3 / 10, 7 / 240])
_D4 = np.array([7 / 240, -2 / 5, 169 / 60, -122 / 15, 91 / 8, -122 / 15, 169 / 60, -2 / 5, 7 / 240])
_OFFSETS = np.arange(-4, 5)


def _numeric_characterization(config, g, z0):
    m = config.mass
    w = config.waist
    out = {}

    def second(f, h):
        return float(_D2 @ f(_OFFSETS * h)) / h**2

    h2 = 2e-3 * w
    out["omega_z"] = np.sqrt(second(lambda d: dipole_potential(config, 0, 0, z0 + d, g), h2) / m)
    out["omega_x"] = np.sqrt(second(lambda d: dipole_potential(config, d, 0, z0, g), h2) / m)
    out["omega_y"] = np.sqrt(second(lambda d: dipole_potential(config, 0, d, z0, g), h2) / m)
    h34 = 2e-2 * w
    vz = dipole_potential(config, 0, 0, z0 + _OFFSETS * h34, g)
    out["alpha"] = float(_D3 @ vz) / h34**3 / 6
    out["beta"] = float(_D4 @ vz) / h34**4 / 24
    return out


def characterize(config: DipoleTrapConfig, effective_g: Optional[float] = None,
                 validate: bool = True) -> LocalTrapCharacterization:
    """Closed-form local trap parameters at the sagged minimum.

    Parameters
    ----------
    effective_g : float, optional
        Acceleration to use instead of ``config.gravity``.
    validate : bool
        Also compute the finite-difference counterparts.
    """
    g = config.gravity if effective_g is None else effective_g
    z0 = sag_z0(config, g)
    w, R, P, m = config.waist, config.rayleigh_range, config.power, config.mass
    hkP = HBAR * config.kappa * P
    gauss = np.exp(-z0**2 / w**2)
    omega_t = np.sqrt(-(2 * R**2 + w**2 - 2 * z0**2) * hkP / (2 * np.pi * m * w**4 * R**2)) * gauss
    omega_z = np.sqrt(-2 * (w**2 - 4 * z0**2) / (np.pi * m * w**6) * hkP) * gauss
    gauss2 = gauss**2
    alpha = 4 * (3 * w**2 - 4 * z0**2) / (3 * np.pi * w**8) * z0 * hkP * gauss2
    beta = (3 * w**4 - 24 * w**2 * z0**2 + 16 * z0**4) / (3 * np.pi * w**10) * hkP * gauss2
    numeric = _numeric_characterization(config, g, z0) if validate else {}
    return LocalTrapCharacterization(z0, omega_t, omega_t, omega_z, alpha, beta, g, numeric)


def turning_points(potential: Callable, energy: float, z_min: float = 0.0,
                   scale: float = 1e-6, max_range: float = 1.0) -> Tuple[float, float]:
    """Classical turning points bracketing ``z_min`` at ``energy``.

    Steps outward geometrically from ``z_min`` until the potential exceeds
    ``energy`` and refines each root with Brent's method.
    """
    if not potential(z_min) < energy:
        raise ValueError("energy must lie above the potential at z_min")

    def f(z):
        return float(potential(z)) - energy

    pts = []
    for direction in (-1.0, 1.0):
        inner, step = z_min, scale
        while True:
            outer = z_min + direction * step
            if f(outer) > 0:
                break
            inner = outer
            step *= 1.6
            if step > max_range:
                raise Unbound("no turning point found below the requested energy")
        pts.append(brentq(f, min(inner, outer), max(inner, outer), xtol=1e-300, rtol=4 * np.finfo(float).eps,
                          maxiter=500))
    return pts[0], pts[1]


def classical_period(potential: Callable, energy: float, mass: float, z_min: float = 0.0,
                     scale: float = 1e-6, rtol: float = 1e-10) -> float:
    """Period of bounded 1D motion ``sqrt(2m) * integral dz / sqrt(E - V)``.

    The substitution ``z = z1 + (z2 - z1) sin^2(theta)`` removes both
    inverse-square-root endpoint singularities; the smooth remainder is
    integrated with Gauss-Legendre rules of increasing order until two
    successive orders agree to ``rtol``.

    Raises
    ------
    Unbound
        If no second turning point exists below ``energy``.
    """
    z1, z2 = turning_points(potential, energy, z_min, scale)
    L = z2 - z1

    def integral(n):
        x, wts = np.polynomial.legendre.leggauss(n)
        theta = 0.25 * np.pi * (x + 1.0)
        s, c = np.sin(theta), np.cos(theta)
        z = z1 + L * s**2
        gap = energy - np.asarray(potential(z), dtype=float)
        integrand = 2.0 * L * s * c / np.sqrt(np.maximum(gap, 0.0) + 1e-300)
        return 0.25 * np.pi * np.dot(wts, integrand)

    n = 32
    prev = integral(n)
    while n < 4096:
        n *= 2
        cur = integral(n)
        if abs(cur - prev) <= rtol * abs(cur):
            prev = cur
            break
        prev = cur
    return np.sqrt(2.0 * mass) * prev


def perturbative_frequency(omega_z, alpha, beta, amplitude, mass: float = MASS_RB87):
    """Amplitude-dependent frequency in a weakly anharmonic well.

    ``w = wz + wz (3 beta/2 - 15 alpha^2 / (4 m wz^2)) Z0^2 / (m wz^2)`` for a
    turning point ``Z0`` of the harmonic motion.
    """
    mw2 = mass * np.asarray(omega_z) ** 2
    return omega_z + omega_z * (1.5 * beta - 3.75 * alpha**2 / mw2) * np.asarray(amplitude) ** 2 / mw2


def harmonic_amplitude(energy, omega_z, mass: float = MASS_RB87):
    """Turning point ``sqrt(2E / (m wz^2))`` of purely harmonic motion."""
    return np.sqrt(2 * np.asarray(energy) / (mass * np.asarray(omega_z) ** 2))
