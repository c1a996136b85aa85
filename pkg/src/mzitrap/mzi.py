"""Analytic Mach-Zehnder interferometer between two trapped internal states.

Pulses are instantaneous and perfect. After the first beam splitter the
*upper* wavepacket moves into the other state's trap while the *lower* one
stays at rest; the central mirror pulse swaps them and the final beam
splitter recombines them at ``2T``. Contrast and phase come from the
closed-form Gaussian overlap, factorized over the three principal axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .constants import HBAR
from .errors import Degenerate, NoSignChange
from .gaussian import (
    GaussianPacket,
    OverlapResult,
    breathing_closed_form,
    evolve_packet,
    ground_packet,
    overlap,
    wrap_phase,
)
from .trapmodel import TrapPair

__all__ = [
    "MziConfig",
    "Interferogram",
    "arm_packets",
    "axis_overlap",
    "interferometer_overlap",
    "signal_1d",
    "signal_3d",
    "signal_from_overlap",
    "slope_cm",
    "slope_cm_for",
    "phase_slope",
    "sensitivity",
    "shot_noise_uncertainty",
    "pulse_phase_delta",
    "quadratic_phase_schedule",
    "scan",
    "find_crossing",
]


def pulse_phase_delta(schedule: Callable[[float, float], float], T: float) -> float:
    """Net pulse phase ``phi(0) - 2 phi(T) + phi(2T)`` entering the signal.

    ``schedule(t, T)`` is evaluated at the three pulse instants.
    """
    return schedule(0.0, T) - 2.0 * schedule(T, T) + schedule(2.0 * T, T)


def quadratic_phase_schedule(target: float = np.pi / 2) -> Callable[[float, float], float]:
    """Schedule ``target * t^2 / (2 T^2)`` whose second difference is ``target``."""
    def schedule(t, T):
        return target * np.asarray(t) ** 2 / (2.0 * np.asarray(T) ** 2)
    return schedule


@dataclass(frozen=True)
class MziConfig:
    """Interferometer setup.

    The initial packet is the ground state of ``initial_state``'s trap. If a
    ``phase_schedule`` is given it overrides ``delta_phi``.
    """

    pair: TrapPair
    initial_state: int = 2
    delta_phi: float = 0.0
    phase_schedule: Optional[Callable[[float, float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.initial_state not in (1, 2):
            raise ValueError("initial_state must be 1 or 2")

    @property
    def other_state(self) -> int:
        return 3 - self.initial_state

    def pulse_phase(self, T):
        if self.phase_schedule is not None:
            return pulse_phase_delta(self.phase_schedule, T)
        return self.delta_phi

    def traps(self, axis: str):
        """``(initial, other)`` 1D traps along ``axis``."""
        return (self.pair.state(self.initial_state).axis(axis),
                self.pair.state(self.other_state).axis(axis))


@dataclass(frozen=True)
class Interferogram:
    """Sampled interferometer signal ``P2(T)``.

    ``signal`` optionally holds the continuous function the samples were
    taken from, which lets crossing searches refine below grid resolution.
    """

    T: np.ndarray
    P2: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)
    signal: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float).ravel()
        P = np.asarray(self.P2, dtype=float).ravel()
        if T.shape != P.shape:
            raise ValueError("T and P2 must have the same length")
        if T.size > 1 and np.any(np.diff(T) <= 0):
            raise ValueError("T must be strictly increasing")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "P2", P)

    def __len__(self):
        return self.T.size


def arm_packets(T, config: MziConfig, axis: str = "z") -> Tuple[GaussianPacket, GaussianPacket]:
    """Upper and lower packets at ``2T`` along one axis."""
    initial, other = config.traps(axis)
    p0 = ground_packet(initial)
    T = np.asarray(T, dtype=float)
    # a packet resting in its own ground state only gains breathing action
    upper = evolve_packet(evolve_packet(p0, other, T), initial, T)
    lower = evolve_packet(evolve_packet(p0, initial, T), other, T)
    return upper, lower


def axis_overlap(T, config: MziConfig, axis: str = "z") -> OverlapResult:
    """Full closed-form overlap along one axis."""
    upper, lower = arm_packets(T, config, axis)
    return overlap(upper, lower)


def interferometer_overlap(T, config: MziConfig, dims: int = 3):
    """Complex overlap ``C exp(i phi)`` of the two arms at ``2T``.

    With ``dims == 3`` the transversal axes contribute their breathing
    factors only (no force acts along them).
    """
    res = axis_overlap(T, config, "z")
    amp = res.contrast * np.exp(1j * (res.breathing_phase + res.cm_phase))
    if dims == 1:
        return amp
    if dims != 3:
        raise ValueError("dims must be 1 or 3")
    for axis in ("x", "y"):
        initial, other = config.traps(axis)
        _, c, ph = breathing_closed_form(other.omega, initial.omega, T)
        amp = amp * c * np.exp(1j * ph)
    return amp


def signal_from_overlap(amplitude, delta_phi, initial_state: int = 2):
    """Population of ``|2>`` after the last pulse given the arm overlap."""
    amplitude = np.asarray(amplitude)
    if initial_state == 2:
        return 0.5 * (1.0 + np.real(amplitude * np.exp(1j * np.asarray(delta_phi))))
    # relabelling 1 <-> 2 flips the sign of every pulse phase
    return 0.5 * (1.0 - np.real(amplitude * np.exp(-1j * np.asarray(delta_phi))))


def _signal(T, config: MziConfig, dims: int):
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise ValueError("T must be positive")
    amp = interferometer_overlap(T, config, dims)
    P = signal_from_overlap(amp, config.pulse_phase(T), config.initial_state)
    P = np.clip(P, 0.0, 1.0)
    return P if P.ndim else float(P)


def signal_1d(T, config: MziConfig):
    """``P2(T)`` of the one-dimensional interferometer along z."""
    return _signal(T, config, 1)


def signal_3d(T, config: MziConfig):
    """``P2(T)`` with transversal breathing contrast and phase included."""
    return _signal(T, config, 3)


def slope_cm(r, n, energy):
    """Centre-of-mass phase slope at ``T = n * period_initial``.

    ``4 (E/hbar) sin^4(x) [r^2 + cot^2(x)]`` with ``x = pi n / r``, written as
    ``4 (E/hbar) [r^2 sin^4 x + sin^2 x cos^2 x]`` so the cotangent pole at
    integer ``n/r`` is removed analytically.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    if np.any(np.asarray(n) < 1):
        raise ValueError("n must be >= 1")
    x = np.pi * np.asarray(n) / r
    s2 = np.sin(x) ** 2
    out = 4.0 * np.asarray(energy) / HBAR * (r**2 * s2**2 + s2 * np.cos(x) ** 2)
    return out if out.ndim else float(out)


def slope_cm_for(config: MziConfig, n: int) -> float:
    """``slope_cm`` with ratio and energy taken from the z traps of ``config``."""
    initial, other = config.traps("z")
    r = initial.omega / other.omega
    dz = initial.minimum - other.minimum
    energy = 0.5 * other.mass * other.omega**2 * dz**2
    return slope_cm(r, n, energy)


def phase_slope(T: float, config: MziConfig, dims: int = 1, step: float = 1e-7) -> float:
    """Derivative of the interferometer phase at ``T`` by central differences."""
    amps = interferometer_overlap(np.array([T - step, T + step]), config, dims)
    dphi = np.angle(amps[1] / amps[0])
    return float(dphi / (2 * step))


def sensitivity(slope, n, period, n_measurements):
    """Relative frequency uncertainty ``1 / (s n T_period sqrt(N))``."""
    return 1.0 / (np.asarray(slope) * n * period * np.sqrt(n_measurements))


def shot_noise_uncertainty(P2, n_measurements):
    """Binomial standard error ``sqrt(P2 (1 - P2) / N)``."""
    P2 = np.asarray(P2, dtype=float)
    return np.sqrt(P2 * (1.0 - P2) / n_measurements)


def scan(config: MziConfig, T_grid, dims: int = 3) -> Interferogram:
    """Evaluate the signal on ``T_grid`` and wrap it as an interferogram."""
    T_grid = np.asarray(T_grid, dtype=float).ravel()
    fn = signal_3d if dims == 3 else signal_1d
    P = fn(T_grid, config) if T_grid.size else np.empty(0)
    sep = config.pair.separation
    meta = {
        "dims": dims,
        "initial_state": config.initial_state,
        "separation_m": sep,
        "force1_N": config.pair.trap1.force_z,
        "force2_N": config.pair.trap2.force_z,
    }
    return Interferogram(T_grid, np.atleast_1d(P), meta, signal=lambda t: fn(t, config))


def _bisect(func, lo, hi, flo, rtol):
    # plain bisection: robust for any continuous difference with a sign change
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = func(mid)
        if fmid == 0.0:
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo <= rtol * abs(mid):
            break
    return 0.5 * (lo + hi)


def find_crossing(series_a: Interferogram, series_b: Interferogram,
                  bracket: Tuple[float, float], rtol: float = 1e-9) -> float:
    """Pulse separation at which two interferograms cross.

    A sign change of ``P2_a - P2_b`` is located on the shared sample grid
    inside ``bracket`` (the one closest to the bracket centre if several
    exist). If both series carry their continuous signal the crossing is
    refined by bisection to relative tolerance ``rtol``; otherwise the
    samples are linearly interpolated.

    Raises
    ------
    Degenerate
        If the two series are identical.
    NoSignChange
        If the difference keeps its sign inside the bracket.
    """
    if series_a.T.shape != series_b.T.shape or not np.array_equal(series_a.T, series_b.T):
        raise ValueError("series must share the same T grid")
    diff = series_a.P2 - series_b.P2
    if np.all(diff == 0.0):
        raise Degenerate("the two series are identical")
    lo, hi = bracket
    idx = np.flatnonzero((series_a.T >= lo) & (series_a.T <= hi))
    if idx.size < 2:
        raise NoSignChange("bracket contains fewer than two samples")
    d = diff[idx]
    exact = idx[d == 0.0]
    change = np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)
    candidates = [(series_a.T[i], None) for i in exact]
    candidates += [(0.5 * (series_a.T[idx[k]] + series_a.T[idx[k + 1]]), k) for k in change]
    if not candidates:
        raise NoSignChange(f"no crossing in [{lo}, {hi}]")
    centre = 0.5 * (lo + hi)
    _, k = min(candidates, key=lambda c: abs(c[0] - centre))
    if k is None:
        return float(min(candidates, key=lambda c: abs(c[0] - centre))[0])
    i0, i1 = idx[k], idx[k + 1]
    t0, t1 = series_a.T[i0], series_a.T[i1]
    if series_a.signal is not None and series_b.signal is not None:
        def func(t):
            return float(series_a.signal(t)) - float(series_b.signal(t))
        f0 = func(t0)
        if f0 == 0.0:
            return float(t0)
        return float(_bisect(func, t0, t1, f0, rtol))
    d0, d1 = diff[i0], diff[i1]
    return float(t0 - d0 * (t1 - t0) / (d1 - d0))
