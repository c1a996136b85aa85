"""Grid-based Mach-Zehnder interferometer.

The longitudinal (grid) wavefunction is propagated through the pulse
sequence pi/2 - T - pi - T - pi/2. Pulses are either perfect and
instantaneous or finite box pulses of the coupled two-level Hamiltonian in
the rotating frame, with the drive resonant at the initial trap minimum.

Transversal axes with harmonic confinement in both states can be factorized
analytically. The run is then *branch resolved*: the grid state is split
by internal state at the end of each free window into histories
``(s1, s2)``, each history carries its own transversal Gaussian packets, and

    P2 = sum_{h,h'} <A_h | A_h'> prod_axes <chi_h | chi_h'>

where ``A_h`` is the final ``|2>`` amplitude of history ``h``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from ..constants import MASS_RB87
from ..errors import GridViolation
from ..gaussian import evolve_packet, ground_packet, overlap
from ..mzi import Interferogram, pulse_phase_delta, signal_from_overlap
from ..trapmodel import HarmonicTrap1D, PulseConfig
from .grid import Grid
from .propagate import SplitStepper, apply_local, curvature_frequency, ground_state, pulse_matrix
from .spectral import SpectralPropagator, instant_mzi_overlap

__all__ = [
    "MziWaveConfig",
    "WaveMziResult",
    "run_mzi",
    "scan_wave",
    "scan_instant_spectral",
    "harmonic_potential",
    "default_workers",
    "transversal_factor",
    "PULSE_MODES",
]

PULSE_MODES = ("instantaneous", "rabi_box")
WORKERS_ENV = "MZITRAP_WORKERS"


def default_workers() -> int:
    """Worker count from ``MZITRAP_WORKERS`` (default 1)."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def harmonic_potential(trap: HarmonicTrap1D) -> Callable:
    """``V(z) = m w^2 z^2 / 2 - F z`` as a vectorized callable."""
    m, w, F = trap.mass, trap.omega, trap.force

    def V(z):
        return 0.5 * m * w**2 * z**2 - F * z
    return V


@dataclass(frozen=True)
class MziWaveConfig:
    """Setup of one grid interferometer run.

    Parameters
    ----------
    grid : Grid
        1D grid along z, or a full 3D grid.
    V1, V2 : callable
        State potentials ``V(z)`` (1D) or ``V(x, y, z)`` (3D), in J.
    T : float
        Pulse separation (s).
    initial_state : {1, 2}
    pulse_mode : {'instantaneous', 'rabi_box'}
    pulse : PulseConfig, optional
        Rabi frequency and phase schedule; required for ``'rabi_box'``.
    phase_schedule : callable, optional
        ``phi(t, T)`` for instantaneous pulses (defaults to zero).
    resonance_position : float, optional
        Point where the drive is resonant; defaults to the grid minimum of the
        initial potential.
    transversal : sequence of (omega1, omega2)
        Harmonic transversal frequencies factorized analytically.
    dt_free, dt_pulse : float, optional
        Step sizes; defaults are the shortest trap period / 200 and
        ``2 pi / (200 Omega)``.
    edge_sigmas, edge_tolerance : float
        A run fails with :class:`GridViolation` when more than
        ``edge_tolerance`` probability lies within ``edge_sigmas`` initial
        widths of a boundary.
    """

    grid: Grid
    V1: Callable
    V2: Callable
    T: float
    mass: float = MASS_RB87
    initial_state: int = 2
    pulse_mode: str = "instantaneous"
    pulse: Optional[PulseConfig] = None
    phase_schedule: Optional[Callable[[float, float], float]] = field(default=None, compare=False)
    resonance_position: Optional[float] = None
    transversal: Tuple[Tuple[float, float], ...] = ()
    dt_free: Optional[float] = None
    dt_pulse: Optional[float] = None
    edge_sigmas: float = 3.0
    edge_tolerance: float = 1e-4

    def __post_init__(self):
        if self.initial_state not in (1, 2):
            raise ValueError("initial_state must be 1 or 2")
        if self.pulse_mode not in PULSE_MODES:
            raise ValueError(f"pulse_mode must be one of {PULSE_MODES}")
        if self.pulse_mode == "rabi_box" and self.pulse is None:
            raise ValueError("rabi_box mode needs a PulseConfig")
        if self.T < 0:
            raise ValueError("T must be non-negative")
        object.__setattr__(self, "transversal",
                           tuple((float(a), float(b)) for a, b in self.transversal))

    def with_T(self, T: float) -> "MziWaveConfig":
        return replace(self, T=float(T))

    def phase(self, t: float) -> float:
        if self.pulse_mode == "rabi_box":
            return float(self.pulse.phase(t, self.T))
        if self.phase_schedule is None:
            return 0.0
        return float(self.phase_schedule(t, self.T))


@dataclass(frozen=True)
class WaveMziResult:
    """Outcome of :func:`run_mzi`."""

    P2: float
    T: float
    branches: Dict[Tuple[int, int], np.ndarray] = field(repr=False)
    transversal_overlaps: Dict[Tuple[Tuple[int, int], Tuple[int, int]], complex] = field(repr=False)
    ground_energy: float = 0.0
    factorized_axes: int = 0


@dataclass
class _Prepared:
    grid: Grid
    V1: np.ndarray
    V2: np.ndarray
    psi0: np.ndarray
    energy: float
    sigma0: float
    omega_min: float


_PREP_CACHE: Dict[tuple, _Prepared] = {}


def _prepare(config: MziWaveConfig) -> _Prepared:
    grid = config.grid
    V1 = grid.evaluate(config.V1)
    V2 = grid.evaluate(config.V2)
    Vi = V1 if config.initial_state == 1 else V2
    gs = ground_state(grid, Vi, config.mass, state=config.initial_state)
    psi0 = gs.component(config.initial_state)
    omegas = [curvature_frequency(grid, V1 - V1.min(), config.mass),
              curvature_frequency(grid, V2 - V2.min(), config.mass)]
    omegas += [w for pair in config.transversal for w in pair]
    rho = np.abs(psi0) ** 2
    sig = 0.0
    for ax, x in enumerate(grid.mesh()):
        mu = float(np.sum(rho * x) / np.sum(rho))
        sig = max(sig, float(np.sqrt(np.sum(rho * (x - mu) ** 2) / np.sum(rho))))
    return _Prepared(grid, V1, V2, psi0, gs.metadata["energy"], sig, min(omegas))


def _prepared(config: MziWaveConfig) -> _Prepared:
    # the ground state is independent of T; cache it per (grid, potentials, state)
    key = (config.grid, config.V1, config.V2, config.initial_state, config.mass)
    prep = _PREP_CACHE.get(key)
    if prep is None:
        prep = _prepare(config)
        if len(_PREP_CACHE) > 16:
            _PREP_CACHE.clear()
        _PREP_CACHE[key] = prep
    return prep


def _check_edges(prep: _Prepared, psi: np.ndarray, config: MziWaveConfig, label: str):
    grid = prep.grid
    band = config.edge_sigmas * prep.sigma0
    rho = np.abs(psi) ** 2
    rho = rho.reshape((-1,) + grid.shape).sum(axis=0)
    for ax in range(grid.ndim):
        x = grid.axis(ax)
        mask = (x < x[0] + band) | (x > x[-1] - band)
        p = float(np.take(rho, np.flatnonzero(mask), axis=ax).sum() * grid.cell_volume)
        if p > config.edge_tolerance:
            raise GridViolation(
                f"{p:.3g} probability within {config.edge_sigmas} sigma of the boundary "
                f"of axis {ax} ({label})")


def _steps(duration: float, dt: float) -> Tuple[int, float]:
    if duration <= 0:
        return 0, 0.0
    n = max(1, int(np.ceil(duration / dt - 1e-9)))
    return n, duration / n


def _transversal_packets(config: MziWaveConfig, history: Tuple[int, int], T: float):
    packets = []
    for w1, w2 in config.transversal:
        traps = {1: HarmonicTrap1D(w1, 0.0, config.mass), 2: HarmonicTrap1D(w2, 0.0, config.mass)}
        p = ground_packet(traps[config.initial_state])
        p = evolve_packet(p, traps[history[0]], T)
        p = evolve_packet(p, traps[history[1]], T)
        packets.append(p)
    return packets


def run_mzi(config: MziWaveConfig) -> WaveMziResult:
    """Population of ``|2>`` after the final pulse.

    Free windows evolve the uncoupled potentials by Strang split-step. For
    ``'rabi_box'`` the pulse windows follow ``[0, t_h]``,
    ``[T + t_h, T + t_h + t_p]`` and ``[2T + t_h + t_p, 2T + 2 t_h + t_p]``
    with ``t_h = pi / (2 Omega)``, ``t_p = pi / Omega``; the state ``|2>``
    carries the constant level offset ``V2 - V1`` at the resonance position
    so that the drive is resonant there. Transversal packets are evolved over
    the two free windows only.

    Raises
    ------
    GridViolation
        If probability reaches the grid boundary bands.
    """
    prep = _prepared(config)
    grid, nd, m, T = prep.grid, prep.grid.ndim, config.mass, config.T
    ax = -(nd + 1)
    V1, V2 = prep.V1, prep.V2

    dt_free = config.dt_free or (2 * np.pi / prep.omega_min) / 200.0
    s0 = config.initial_state
    psi = np.zeros((2,) + grid.shape, dtype=complex)
    psi[s0 - 1] = prep.psi0

    rabi = config.pulse_mode == "rabi_box"
    if rabi:
        Omega = config.pulse.rabi_frequency
        t_half, t_pi = config.pulse.tau_half_pi, config.pulse.tau_pi
        dt_pulse = config.dt_pulse or 2 * np.pi / (200.0 * Omega)
        if config.resonance_position is None:
            Vi = V1 if s0 == 1 else V2
            idx = np.unravel_index(np.argmin(Vi), Vi.shape)
            offset = float(V2[idx] - V1[idx])
        else:
            zr = config.resonance_position
            pt = (zr,) if nd == 1 else (0.0, 0.0, zr)
            offset = float(np.asarray(config.V2(*pt)) - np.asarray(config.V1(*pt)))
        V2 = V2 - offset
        times = (0.0, T + t_half, 2 * T + t_half + t_pi)
        durations = (t_half, t_pi, t_half)
    else:
        times = (0.0, T, 2 * T)

    def pulse(arr, k):
        phase = config.phase(times[k])
        if not rabi:
            kind = "pi" if k == 1 else "half_pi"
            return apply_local(arr, pulse_matrix(kind, phase), nd)
        n, dt = _steps(durations[k], dt_pulse)
        return SplitStepper(grid, V1, V2, dt, m, Omega, phase).run(arr, n)

    n_free, dt = _steps(T, dt_free)
    free = SplitStepper(grid, V1, V2, dt, m) if n_free else None

    def split(arr):
        # arr: (..., 2, *grid) -> (..., 2[s], 2, *grid) keeping component s only
        a, b = np.take(arr, 0, axis=ax), np.take(arr, 1, axis=ax)
        z = np.zeros_like(a)
        first = np.stack([a, z], axis=ax)
        second = np.stack([z, b], axis=ax)
        return np.stack([first, second], axis=ax - 1)

    psi = pulse(psi, 0)
    if free is not None:
        psi = free.run(psi, n_free)
    _check_edges(prep, psi, config, "first free window")
    psi = split(psi)                      # (2[s1], 2, *grid)
    psi = pulse(psi, 1)
    if free is not None:
        psi = free.run(psi, n_free)
    _check_edges(prep, psi, config, "second free window")
    psi = split(psi)                      # (2[s1], 2[s2], 2, *grid)
    psi = pulse(psi, 2)
    final = np.take(psi, 1, axis=ax)      # |2> amplitudes, shape (2, 2, *grid)

    dv = grid.cell_volume
    branches = {}
    for s1 in (1, 2):
        for s2 in (1, 2):
            A = final[s1 - 1, s2 - 1]
            if np.sum(np.abs(A) ** 2) * dv > 1e-28:
                branches[(s1, s2)] = A

    keys = list(branches)
    packets = {h: _transversal_packets(config, h, T) for h in keys}
    X = {}
    P2 = 0.0
    for h in keys:
        for k in keys:
            x = 1.0 + 0.0j
            for pu, pl in zip(packets[h], packets[k]):
                res = overlap(pu, pl)
                x *= res.contrast * np.exp(1j * res.phase)
            X[(h, k)] = x
            P2 += float(np.real(np.sum(np.conj(branches[h]) * branches[k]) * dv * x))
    return WaveMziResult(float(np.clip(P2, 0.0, 1.0)), T, branches, X, prep.energy,
                         len(config.transversal))


def _run_one(config: MziWaveConfig, T: float) -> float:
    return run_mzi(config.with_T(T)).P2


def scan_wave(config: MziWaveConfig, T_grid: Sequence[float], workers: Optional[int] = None) -> Interferogram:
    """Evaluate :func:`run_mzi` on ``T_grid`` with up to ``workers`` threads.

    Each point is an independent job; FFTs release the interpreter lock so
    threads give real concurrency without copying the configuration.
    """
    T_grid = np.asarray(T_grid, dtype=float).ravel()
    workers = workers or default_workers()
    if T_grid.size:
        _prepared(config)
    if workers > 1 and T_grid.size > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            P = list(pool.map(lambda t: _run_one(config, t), T_grid))
    else:
        P = [_run_one(config, t) for t in T_grid]
    meta = {"method": "split_step", "pulse_mode": config.pulse_mode,
            "initial_state": config.initial_state, "grid": config.grid.describe(),
            "factorized_axes": len(config.transversal),
            "full_3d": config.grid.ndim == 3}
    return Interferogram(T_grid, np.asarray(P, dtype=float), meta)


def transversal_factor(transversal, T, initial_state: int = 2, mass: float = MASS_RB87):
    """Product of transversal arm overlaps ``<chi_u | chi_l>`` for perfect pulses."""
    T = np.asarray(T, dtype=float)
    out = np.ones(T.shape, dtype=complex)
    other = 3 - initial_state
    for w1, w2 in transversal:
        traps = {1: HarmonicTrap1D(w1, 0.0, mass), 2: HarmonicTrap1D(w2, 0.0, mass)}
        p0 = ground_packet(traps[initial_state])
        upper = evolve_packet(evolve_packet(p0, traps[other], T), traps[initial_state], T)
        lower = evolve_packet(evolve_packet(p0, traps[initial_state], T), traps[other], T)
        res = overlap(upper, lower)
        out = out * res.contrast * np.exp(1j * res.phase)
    return out


def scan_instant_spectral(grid: Grid, V1: Callable, V2: Callable, T_grid, initial_state: int = 2,
                          transversal=(), phase_schedule=None, delta_phi: float = 0.0,
                          mass: float = MASS_RB87, chunk: int = 512) -> Interferogram:
    """Instantaneous-pulse interferogram by exact spectral propagation (1D grids).

    Equivalent to :func:`run_mzi` with ``dt -> 0`` and the grid ground state;
    used for long, finely sampled scans.
    """
    T_grid = np.asarray(T_grid, dtype=float).ravel()
    props = {1: SpectralPropagator.build(grid, grid.evaluate(V1), mass),
             2: SpectralPropagator.build(grid, grid.evaluate(V2), mass)}
    amp = instant_mzi_overlap(props[initial_state], props[3 - initial_state], T_grid, chunk)
    if transversal:
        amp = amp * transversal_factor(transversal, T_grid, initial_state, mass)
    if phase_schedule is not None:
        dphi = np.array([pulse_phase_delta(phase_schedule, t) for t in T_grid])
    else:
        dphi = delta_phi
    P = np.clip(signal_from_overlap(amp, dphi, initial_state), 0.0, 1.0)
    meta = {"method": "spectral", "pulse_mode": "instantaneous", "initial_state": initial_state,
            "grid": grid.describe(), "factorized_axes": len(transversal), "full_3d": False}
    return Interferogram(T_grid, np.atleast_1d(P), meta)
