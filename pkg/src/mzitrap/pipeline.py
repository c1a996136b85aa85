"""Dipole-trap characterization pipeline.

For each effective acceleration ``g2`` of state ``|2>`` the 1D interferometer
along z is simulated on a grid (instantaneous pulses, transversal axes
factorized analytically with the local harmonic frequencies), the resonances
are located at multiples of the Taylor-expanded periods, and their
correlation delays give one frequency per resonance family. Fitting these
against the trap separation and extrapolating to zero separation recovers
``omega_{1,z}``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constants import G_EARTH
from .dipole import DipoleTrapConfig, axial_potential, characterize, reference_dipole_config
from .errors import Underdetermined
from .extraction import (
    OSCILLATING,
    QUASI_GAUSSIAN,
    AnharmonicityBounds,
    FitResult,
    FrequencyEstimate,
    ResonanceSegment,
    anharmonicity_bounds,
    correlate_all,
    fit_frequencies,
    frequency_from_delay,
    segment_by_centres,
)
from .mzi import Interferogram
from .wave.grid import Grid
from .wave.mzi import scan_instant_spectral

__all__ = [
    "DipoleMziSetup",
    "ResonanceAnalysis",
    "PipelineResult",
    "dipole_setup",
    "resonance_window",
    "half_aliasing_order",
    "resonance_orders",
    "predicted_centres",
    "analyse_configuration",
    "simulate_dipole_scan",
    "analyse_resonances",
    "run_pipeline",
    "fit_families",
    "DEFAULT_G2",
]

DEFAULT_G2 = (0.7, 0.75, 0.8, 0.85, 0.9)


@dataclass(frozen=True)
class DipoleMziSetup:
    """Everything needed to simulate one (``g2``, initial state) configuration."""

    config: DipoleTrapConfig
    g1: float
    g2: float
    initial_state: int
    grid: Grid
    omega_z: Tuple[float, float]
    transversal: Tuple[Tuple[float, float], ...]
    z0: Tuple[float, float]

    @property
    def separation(self) -> float:
        return abs(self.z0[1] - self.z0[0])

    @property
    def periods(self) -> Tuple[float, float]:
        return tuple(2 * np.pi / w for w in self.omega_z)

    def family_period(self, kind: str) -> float:
        """Predicted period probed by a resonance family.

        Quasi-Gaussian resonances recur with the other state's period,
        oscillating ones with the initial state's period.
        """
        s = self.initial_state
        state = (3 - s) if kind == QUASI_GAUSSIAN else s
        return self.periods[state - 1]

    def family_state(self, kind: str) -> int:
        return (3 - self.initial_state) if kind == QUASI_GAUSSIAN else self.initial_state


def dipole_setup(g2_factor: float, initial_state: int = 2, config: Optional[DipoleTrapConfig] = None,
                 n_points: int = 256, margin: float = 25e-6) -> DipoleMziSetup:
    """State 1 feels ``g_E``; state 2 feels ``g2_factor * g_E``."""
    config = config or reference_dipole_config()
    g1, g2 = config.gravity, g2_factor * G_EARTH
    c1, c2 = characterize(config, g1), characterize(config, g2)
    z1, z2 = c1.z0, c2.z0
    zi, zo = (z1, z2) if initial_state == 1 else (z2, z1)
    far = 2 * zo - zi
    lo, hi = min(zi, far) - margin, max(zi, far) + margin
    grid = Grid.around(lo, hi, n_points)
    return DipoleMziSetup(config, g1, g2, initial_state, grid, (c1.omega_z, c2.omega_z),
                          ((c1.omega_x, c2.omega_x), (c1.omega_y, c2.omega_y)), (z1, z2))


def half_aliasing_order(setup: DipoleMziSetup) -> int:
    """Order ``n`` at which the two families' centres are half a period apart."""
    Pq, Po = setup.family_period(QUASI_GAUSSIAN), setup.family_period(OSCILLATING)
    return max(3, int(round(0.5 * min(Pq, Po) / abs(Pq - Po))))


def resonance_orders(setup: DipoleMziSetup, half_width: int = 2) -> np.ndarray:
    n = half_aliasing_order(setup)
    return np.arange(max(1, n - half_width), n + half_width + 1)


def predicted_centres(setup: DipoleMziSetup, orders) -> List[Tuple[float, str]]:
    return sorted((n * setup.family_period(k), k) for k in (QUASI_GAUSSIAN, OSCILLATING) for n in orders)


def resonance_window(setup: DipoleMziSetup, half_width: int = 2) -> Tuple[float, float]:
    """Range of ``T`` covering the predicted resonances around the half-aliasing order.

    There the two families are maximally separated, so overlap between
    neighbouring resonances is smallest.
    """
    cs = predicted_centres(setup, resonance_orders(setup, half_width))
    pad = 0.5 * min(setup.periods)
    return cs[0][0] - pad, cs[-1][0] + pad


def simulate_dipole_scan(setup: DipoleMziSetup, T_grid) -> Interferogram:
    """Instantaneous-pulse grid interferogram (spectral propagation)."""
    V1 = axial_potential(setup.config, setup.g1)
    V2 = axial_potential(setup.config, setup.g2)
    series = scan_instant_spectral(setup.grid, V1, V2, T_grid, setup.initial_state, setup.transversal,
                                   mass=setup.config.mass)
    series.metadata.update({"g1_m_s2": setup.g1, "g2_m_s2": setup.g2,
                            "separation_m": setup.separation})
    return series


@dataclass(frozen=True)
class ResonanceAnalysis:
    setup: DipoleMziSetup
    series: Interferogram = field(repr=False)
    segments: Dict[str, List[ResonanceSegment]] = field(repr=False)
    delays: Dict[str, float]
    delay_spread: Dict[str, float]
    pair_delays: Dict[str, List[float]]
    estimates: List[FrequencyEstimate]


def analyse_resonances(setup: DipoleMziSetup, series: Interferogram, threshold: float = 0.02,
                       half_width: int = 2) -> ResonanceAnalysis:
    """Segment a scan at the predicted centres and turn each family into a frequency.

    Segment boundaries are midpoints between neighbouring predicted centres;
    the outermost centres only bound the interior segments.
    """
    segs = segment_by_centres(series, predicted_centres(setup, resonance_orders(setup, half_width)), threshold)
    fam = {QUASI_GAUSSIAN: [], OSCILLATING: []}
    for seg in segs:
        fam[seg.kind].append(seg)
    delays, spread, pairs, est = {}, {}, {}, []
    for kind, items in fam.items():
        if len(items) < 2:
            raise Underdetermined(f"found {len(items)} {kind} resonances")
        res, mean, std = correlate_all(items, setup.family_period(kind))
        delays[kind], spread[kind] = mean, std
        pairs[kind] = [r.tau for r in res]
        omega = frequency_from_delay(mean)
        est.append(FrequencyEstimate(omega, f"correlation:{kind}:state{setup.family_state(kind)}",
                                     setup.separation, omega * std / mean if std else 0.0))
    return ResonanceAnalysis(setup, series, fam, delays, spread, pairs, est)


def analyse_configuration(g2_factor: float, initial_state: int = 2, dT: float = 2e-6,
                          config: Optional[DipoleTrapConfig] = None, n_points: int = 256,
                          threshold: float = 0.02, half_width: int = 2) -> ResonanceAnalysis:
    setup = dipole_setup(g2_factor, initial_state, config, n_points)
    lo, hi = resonance_window(setup, half_width)
    T = np.arange(lo, hi, dT)
    series = simulate_dipole_scan(setup, T)
    return analyse_resonances(setup, series, threshold, half_width)


@dataclass(frozen=True)
class PipelineResult:
    analyses: List[ResonanceAnalysis] = field(repr=False)
    fits: Dict[str, FitResult]
    intercept_mean: float
    bounds: Optional[AnharmonicityBounds]
    omega_reference: float

    @property
    def relative_deviation(self) -> float:
        return abs(self.intercept_mean - self.omega_reference) / self.omega_reference


def fit_families(analyses: Sequence[ResonanceAnalysis]) -> Dict[str, FitResult]:
    """One fit per (initial state, family).

    Families probing state ``|1>`` (fixed trap) use ``k1 + k3 dz^2``; those
    probing state ``|2>`` (trap moved by ``g2``) use the full quadratic.
    """
    groups: Dict[str, List[FrequencyEstimate]] = {}
    for an in analyses:
        for kind in (QUASI_GAUSSIAN, OSCILLATING):
            est = [e for e in an.estimates if e.source.startswith(f"correlation:{kind}")]
            key = f"start{an.setup.initial_state}:{kind}:state{an.setup.family_state(kind)}"
            groups.setdefault(key, []).extend(est)
    fits = {}
    for key, est in sorted(groups.items()):
        model = "k1_k3" if key.endswith("state1") else "k1_k2_k3"
        fits[key] = fit_frequencies(est, model, weighted=False)
    return fits


def run_pipeline(g2_factors: Sequence[float] = DEFAULT_G2, initial_states: Sequence[int] = (1, 2),
                 config: Optional[DipoleTrapConfig] = None, dT: float = 2e-6, workers: int = 1,
                 n_points: int = 256) -> PipelineResult:
    """Simulate, extract, fit and extrapolate; bounds come from the state-1 fit
    started in ``|2>`` (the lower curve of the frequency plot)."""
    config = config or reference_dipole_config()
    jobs = [(g, s) for g in g2_factors for s in initial_states]

    def job(args):
        return analyse_configuration(args[0], args[1], dT, config, n_points)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            analyses = list(pool.map(job, jobs))
    else:
        analyses = [job(a) for a in jobs]
    fits = fit_families(analyses)
    intercepts = [f.intercept for f in fits.values()]
    ref = characterize(config, config.gravity)
    bounds = None
    lower = fits.get(f"start2:{QUASI_GAUSSIAN}:state1")
    if lower is not None and lower.k["k3"] <= 0:
        bounds = anharmonicity_bounds(lower.k["k3"], config.mass, ref.omega_z)
    return PipelineResult(analyses, fits, float(np.mean(intercepts)), bounds, ref.omega_z)
