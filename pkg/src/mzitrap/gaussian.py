"""Closed-form Gaussian wavepacket dynamics in harmonic traps.

A packet is described by its centroid ``q``, width ``sigma`` and their rates,
plus the accumulated action ``c`` split into a centre-of-mass part and a
breathing part. Inside a harmonic trap with constant force the Newton and
Ermakov equations are solved exactly, so propagation over any duration is a
single closed-form evaluation.

All functions broadcast over numpy arrays: a packet whose fields are arrays
represents a batch of independent packets (e.g. one per pulse separation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .constants import HBAR, MASS_RB87
from .trapmodel import HarmonicTrap1D

__all__ = [
    "GaussianPacket",
    "OverlapResult",
    "TrapTimeline",
    "ground_packet",
    "evolve_packet",
    "evolve_timeline",
    "action_cm_segment",
    "action_breathing_segment",
    "cm_energy",
    "breathing_energy",
    "overlap",
    "breathing_closed_form",
    "packet_wavefunction",
    "wrap_phase",
]


def wrap_phase(phi):
    """Map angles to the interval (-pi, pi]."""
    phi = np.asarray(phi, dtype=float)
    out = np.pi - np.mod(np.pi - phi, 2 * np.pi)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GaussianPacket:
    """First and second moments of a Gaussian wavepacket plus its action.

    The phase-space quantities of the ansatz follow as ``a = m sigmadot/sigma``
    and ``b = m qdot``.
    """

    q: float
    qdot: float
    sigma: float
    sigmadot: float
    action_cm: float = 0.0
    action_breathing: float = 0.0
    mass: float = MASS_RB87

    def __post_init__(self):
        if not np.all(np.asarray(self.sigma) > 0):
            raise ValueError("sigma must be positive")

    @property
    def a(self):
        return self.mass * np.asarray(self.sigmadot) / np.asarray(self.sigma)

    @property
    def b(self):
        return self.mass * np.asarray(self.qdot)

    @property
    def action(self):
        return np.asarray(self.action_cm) + np.asarray(self.action_breathing)


@dataclass(frozen=True)
class OverlapResult:
    """Contrast and phase of ``<psi_upper | psi_lower>``.

    ``contrast`` and ``phase`` describe the full overlap, the phase wrapped to
    (-pi, pi]. The breathing and centre-of-mass factors are kept unwrapped.
    """

    contrast: float
    phase: float
    breathing_contrast: float
    cm_contrast: float
    breathing_phase: float
    cm_phase: float

    @property
    def amplitude(self):
        return self.contrast * np.exp(1j * np.asarray(self.phase))


@dataclass(frozen=True)
class TrapTimeline:
    """Piecewise-constant sequence of ``(duration, trap)`` segments."""

    segments: Tuple[Tuple[float, HarmonicTrap1D], ...]

    def __post_init__(self):
        segs = tuple((d, trap) for d, trap in self.segments)
        if not segs:
            raise ValueError("a timeline needs at least one segment")
        for d, _ in segs:
            if np.any(np.asarray(d) < 0):
                raise ValueError("segment durations must be non-negative")
        object.__setattr__(self, "segments", segs)

    @property
    def duration(self):
        return sum(d for d, _ in self.segments)


def ground_packet(trap: HarmonicTrap1D) -> GaussianPacket:
    """Ground state of ``trap`` at rest in the trap minimum, zero action."""
    return GaussianPacket(
        q=trap.force / (trap.mass * trap.omega**2),
        qdot=0.0,
        sigma=np.sqrt(HBAR / (trap.mass * trap.omega)),
        sigmadot=0.0,
        mass=trap.mass,
    )


def _width_coefficients(packet: GaussianPacket, omega: float):
    s0 = np.asarray(packet.sigma, dtype=float)
    u = np.asarray(packet.sigmadot, dtype=float) / (omega * s0)
    v = HBAR / (packet.mass * omega * s0**2)
    return s0, u, v


def action_cm_segment(packet: GaussianPacket, trap: HarmonicTrap1D, duration):
    """Centre-of-mass action accumulated over ``duration`` in ``trap``.

    Integral of ``m qdot^2/2 - m w^2 q^2/2 + F q`` along the classical
    trajectory, evaluated in closed form after a partial integration.
    """
    m, w, F = trap.mass, trap.omega, trap.force
    t = np.asarray(duration, dtype=float)
    q0 = np.asarray(packet.q, dtype=float)
    v0 = np.asarray(packet.qdot, dtype=float)
    qeq = F / (m * w**2)
    c, s = np.cos(w * t), np.sin(w * t)
    q = qeq + (q0 - qeq) * c + v0 / w * s
    v = -w * (q0 - qeq) * s + v0 * c
    return (0.5 * m * (v * q - v0 * q0) + F**2 * t / (2 * m * w**2)
            + F / (2 * w) * (q0 - qeq) * s - F * v0 / (2 * w**2) * (c - 1.0))


def action_breathing_segment(packet: GaussianPacket, trap: HarmonicTrap1D, duration):
    """Breathing action ``-(hbar^2/2m) * integral of sigma^-2`` over ``duration``.

    The closed form contains ``arctan(A + B tan(w t))``; the branch is tracked
    through the rotation angle of the vector ``(cos wt, A cos wt + B sin wt)``
    so the result is continuous in ``duration`` for all ``t``.
    """
    m, w = packet.mass, trap.omega
    theta = w * np.asarray(duration, dtype=float)
    s0 = np.asarray(packet.sigma, dtype=float)
    sd0 = np.asarray(packet.sigmadot, dtype=float)
    A = m * sd0 * s0 / HBAR
    B = m * sd0**2 / (HBAR * w) + HBAR / (m * w * s0**2)
    c, s = np.cos(theta), np.sin(theta)
    # B > 0 keeps the linear map orientation-preserving, so the angle offset
    # relative to theta never crosses +-pi.
    offset = wrap_phase(np.arctan2(A * c + B * s, c) - theta)
    return -0.5 * HBAR * (theta + offset - np.arctan(A))


def evolve_packet(packet: GaussianPacket, trap: HarmonicTrap1D, duration) -> GaussianPacket:
    """Propagate ``packet`` for ``duration`` inside ``trap`` in closed form."""
    if np.any(np.asarray(duration) < 0):
        raise ValueError("duration must be non-negative")
    m, w, F = trap.mass, trap.omega, trap.force
    if m != packet.mass:
        raise ValueError("packet and trap masses differ")
    t = np.asarray(duration, dtype=float)
    q0 = np.asarray(packet.q, dtype=float)
    v0 = np.asarray(packet.qdot, dtype=float)
    qeq = F / (m * w**2)
    c1, s1 = np.cos(w * t), np.sin(w * t)
    q = qeq + (q0 - qeq) * c1 + v0 / w * s1
    v = -w * (q0 - qeq) * s1 + v0 * c1

    s0, u, vv = _width_coefficients(packet, w)
    c2, s2 = np.cos(2 * w * t), np.sin(2 * w * t)
    half_sum = 0.5 * (1 + u**2 + vv**2)
    half_diff = 0.5 * (1 - u**2 - vv**2)
    sig2 = s0**2 * (half_sum + half_diff * c2 + u * s2)
    sig = np.sqrt(sig2)
    sigdot = s0**2 * w * (-half_diff * s2 + u * c2) / sig

    return GaussianPacket(
        q=q, qdot=v, sigma=sig, sigmadot=sigdot,
        action_cm=np.asarray(packet.action_cm) + action_cm_segment(packet, trap, t),
        action_breathing=np.asarray(packet.action_breathing)
        + action_breathing_segment(packet, trap, t),
        mass=m,
    )


def evolve_timeline(packet: GaussianPacket, timeline: TrapTimeline) -> GaussianPacket:
    """Propagate through each segment of ``timeline`` in order."""
    for duration, trap in timeline.segments:
        packet = evolve_packet(packet, trap, duration)
    return packet


def cm_energy(packet: GaussianPacket, trap: HarmonicTrap1D):
    """Conserved centre-of-mass energy ``m qdot^2/2 + m w^2 q^2/2 - F q``."""
    m, w, F = trap.mass, trap.omega, trap.force
    q, v = np.asarray(packet.q), np.asarray(packet.qdot)
    return 0.5 * m * v**2 + 0.5 * m * w**2 * q**2 - F * q


def breathing_energy(packet: GaussianPacket, trap: HarmonicTrap1D):
    """Conserved breathing energy of the width degree of freedom."""
    m, w = trap.mass, trap.omega
    s, sd = np.asarray(packet.sigma), np.asarray(packet.sigmadot)
    return 0.25 * m * sd**2 + HBAR**2 / (4 * m * s**2) + 0.25 * m * w**2 * s**2


def _complex_width(p: GaussianPacket):
    W = 1.0 / np.asarray(p.sigma) ** 2 - 1j * p.a / HBAR
    Q = np.asarray(p.q) + 1j * p.b / (HBAR * W)
    return W, Q


def overlap(upper: GaussianPacket, lower: GaussianPacket) -> OverlapResult:
    """Overlap integral of two Gaussian packets, split into factors.

    Both packets must carry actions measured from a common origin.
    """
    Wu, Qu = _complex_width(upper)
    Wl, Ql = _complex_width(lower)
    su, sl = np.asarray(upper.sigma), np.asarray(lower.sigma)
    S = Wl + np.conj(Wu)
    bu, bl = upper.b, lower.b
    X = (-0.5 * Wl * np.conj(Wu) / S * (Ql - np.conj(Qu)) ** 2
         - bl**2 / (2 * HBAR**2 * Wl) - bu**2 / (2 * HBAR**2 * np.conj(Wu)))

    c_b = np.sqrt(2.0 / (su * sl)) / np.sqrt(np.abs(S))
    phi_b = (-0.5 * np.angle(S)
             + (np.asarray(lower.action_breathing) - np.asarray(upper.action_breathing)) / HBAR)
    c_cm = np.exp(X.real)
    phi_cm = X.imag + (np.asarray(lower.action_cm) - np.asarray(upper.action_cm)) / HBAR

    contrast = c_b * c_cm
    return OverlapResult(
        contrast=contrast,
        phase=wrap_phase(phi_b + phi_cm),
        breathing_contrast=c_b,
        cm_contrast=c_cm,
        breathing_phase=phi_b,
        cm_phase=phi_cm,
    )


def breathing_closed_form(omega1, omega2, T):
    """Breathing-only contrast and phase of the Mach-Zehnder sequence.

    The packet starts in the ground state of the ``omega2`` trap; one arm
    spends ``T`` in ``omega1`` then ``T`` in ``omega2``, the other the
    reverse order. No forces act.

    Returns
    -------
    energy : scaled breathing energy ``E_B / (hbar omega2)`` of the moving arm
        in the second interval
    contrast : breathing contrast at ``2T``
    phase : breathing phase at ``2T``
    """
    w1 = np.asarray(omega1, dtype=float)
    w2 = np.asarray(omega2, dtype=float)
    T = np.asarray(T, dtype=float)
    e = ((w1**2 + w2**2) ** 2 - (w1**2 - w2**2) ** 2 * np.cos(2 * w1 * T)) / (8 * w1**2 * w2**2)
    c2, s2 = np.cos(2 * w2 * T), np.sin(2 * w2 * T)
    # denominator >= 2 since e >= 1/2, so plain arctan is branch-safe
    phase = 0.5 * np.arctan((2 * e - 1) * s2 / (2 * e + 1 - (2 * e - 1) * c2))
    contrast = (2.0 / (1 + 4 * e**2 + (1 - 4 * e**2) * c2)) ** 0.25
    return e, contrast, phase


def packet_wavefunction(packet: GaussianPacket, z) -> np.ndarray:
    """Sample the Gaussian ansatz on positions ``z``.

    Only valid for scalar packets.
    """
    z = np.asarray(z, dtype=float)
    s = float(packet.sigma)
    dz = z - float(packet.q)
    phase = 0.5 * float(packet.a) * dz**2 + float(packet.b) * dz + float(packet.action)
    return (np.pi * s**2) ** -0.25 * np.exp(-dz**2 / (2 * s**2) + 1j * phase / HBAR)


def timeline_from(pairs: Sequence[Tuple[float, HarmonicTrap1D]]) -> TrapTimeline:
    return TrapTimeline(tuple(pairs))
