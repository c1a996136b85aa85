"""Command-line front end.

Subcommands read a scenario file (see :mod:`mzitrap.scenario`), run the
corresponding computation and write CSV tables, a JSON manifest and, when
matplotlib is available, SVG plots into ``--out``. CSV is the contract:
floats use 17 significant digits, interferograms have the header
``T_s,P2`` and frequency estimates ``dz_m,omega_rad_s,source``. Plot
failures are logged in the manifest and never change the exit status.

Exit status is 0 on success, 2 for invalid scenarios or arguments and 1 for
failures during the computation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
import scipy
import scipy.constants

from . import __version__
from .constants import CONSTANTS, G_EARTH, MASS_RB87
from .dipole import DipoleTrapConfig, RB87_DLINES, axial_potential, characterize
from .errors import MziTrapError, ScenarioError
from .extraction import (
    OSCILLATING,
    QUASI_GAUSSIAN,
    FrequencyEstimate,
    anharmonicity_bounds,
    correlate_all,
    fit_frequencies,
    frequency_from_delay,
    segment_by_centres,
    segment_resonances,
)
from .mzi import Interferogram, MziConfig, find_crossing, quadratic_phase_schedule, scan, signal_3d
from .pipeline import DEFAULT_G2, analyse_configuration, dipole_setup, run_pipeline
from .scenario import Scenario, load_scenario, parse_scenario, T_grid
from .trapmodel import PulseConfig, Trap3D, TrapPair, table1_pair
from .wave.grid import Grid
from .wave.mzi import MziWaveConfig, default_workers, harmonic_potential, scan_instant_spectral, scan_wave

__all__ = [
    "main",
    "build_parser",
    "run_scenario",
    "shot_noise_emulate",
    "write_interferogram",
    "read_interferogram",
    "write_estimates",
    "read_estimates",
    "bundled_scenario",
    "FIGURES",
]

log = logging.getLogger("mzitrap")

FIGURES = ("fig2c", "fig3", "fig4a", "fig4b", "figS2")


# -- CSV ---------------------------------------------------------------------

def _f(x: float) -> str:
    return f"{float(x):.17g}"


def write_interferogram(path, series: Interferogram) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["T_s", "P2"])
        w.writerows([_f(t), _f(p)] for t, p in zip(series.T, series.P2))
    return path


def read_interferogram(path) -> Interferogram:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["T_s", "P2"]:
        raise ScenarioError(f"{path}: expected header 'T_s,P2'")
    try:
        data = np.array(rows[1:], dtype=float).reshape(-1, 2)
    except ValueError:
        raise ScenarioError(f"{path}: non-numeric interferogram rows") from None
    return Interferogram(data[:, 0], data[:, 1], {"source": str(path)})


def write_estimates(path, estimates: Iterable[FrequencyEstimate]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dz_m", "omega_rad_s", "source"])
        w.writerows([_f(e.separation), _f(e.omega), e.source] for e in estimates)
    return path


def read_estimates(path) -> List[FrequencyEstimate]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["dz_m", "omega_rad_s", "source"]:
        raise ScenarioError(f"{path}: expected header 'dz_m,omega_rad_s,source'")
    try:
        return [FrequencyEstimate(float(w), s, float(dz)) for dz, w, s in rows[1:]]
    except ValueError as exc:
        raise ScenarioError(f"{path}: bad estimate row ({exc})") from None


def _write_rows(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_f(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


# -- shot noise ----------------------------------------------------------------

def shot_noise_emulate(series: Interferogram, atoms_per_shot: int, shots: int, seed: int) -> Interferogram:
    """Replace each ``P2`` by the mean of ``shots`` binomial draws.

    Each shot counts atoms in ``|2>`` out of ``atoms_per_shot``; the result is
    the mean fraction, reproducible for a given ``seed``.
    """
    if atoms_per_shot < 1 or shots < 1:
        raise ValueError("atoms_per_shot and shots must be positive")
    rng = np.random.default_rng(seed)
    p = np.clip(series.P2, 0.0, 1.0)
    counts = rng.binomial(atoms_per_shot, p, size=(shots, p.size))
    noisy = counts.mean(axis=0) / atoms_per_shot
    meta = dict(series.metadata, atoms_per_shot=atoms_per_shot, shots=shots, noise_seed=seed)
    return Interferogram(series.T, noisy, meta)


# -- run context ------------------------------------------------------------------

@dataclass
class RunContext:
    scenario: Scenario
    out: Path
    workers: int
    seed: int
    outputs: List[str] = field(default_factory=list)
    plots: List[str] = field(default_factory=list)
    plot_errors: List[str] = field(default_factory=list)
    parameters: Dict[str, object] = field(default_factory=dict)
    results: Dict[str, object] = field(default_factory=dict)

    def path(self, name: str) -> Path:
        prefix = self.scenario.get("output", "prefix", "")
        return self.out / f"{prefix}{name}"

    def interferogram(self, name: str, series: Interferogram) -> Path:
        p = write_interferogram(self.path(name), series)
        self.outputs.append(p.name)
        return p

    def table(self, name: str, header, rows) -> Path:
        p = _write_rows(self.path(name), header, rows)
        self.outputs.append(p.name)
        return p

    def estimates(self, name: str, est) -> Path:
        p = write_estimates(self.path(name), est)
        self.outputs.append(p.name)
        return p

    def plot(self, name: str, draw: Callable) -> None:
        if not self.scenario.get("output", "plots", True):
            return
        try:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt

            fig, ax = plt.subplots(figsize=(6.4, 3.6))
            draw(ax)
            fig.tight_layout()
            p = self.path(name)
            fig.savefig(p, format="svg", metadata={"Date": None})
            plt.close(fig)
            self.plots.append(p.name)
        except Exception as exc:  # plots are a convenience only
            log.warning("plot %s skipped: %s", name, exc)
            self.plot_errors.append(f"{name}: {exc}")


def _plot_series(files: Dict[str, Path], xlabel="T (ms)", ylabel="P2", vlines=()):
    def draw(ax):
        for label, f in files.items():
            s = read_interferogram(f)
            ax.plot(s.T * 1e3, s.P2, lw=0.8, label=label)
        for v in vlines:
            ax.axvline(v * 1e3, color="0.6", lw=0.5, ls=":")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if len(files) > 1:
            ax.legend(fontsize=7)
    return draw


# -- scenario -> objects --------------------------------------------------------------

def _pair(sc: Scenario, g: Optional[float] = None) -> TrapPair:
    preset = sc.get("trap", "preset", "table1")
    if preset == "table1":
        g = _g_values(sc)[0] if g is None else g
        return table1_pair(g / G_EARTH, transversal=sc.get("trap", "transversal", True))
    if preset != "custom":
        raise ScenarioError(f"trap.preset: expected 'table1' or 'custom', got {preset!r}")
    traps = []
    for s in (1, 2):
        omegas = tuple(sc.require("trap", f"omega{s}_{a}") for a in "xyz")
        gs = sc.get("trap", f"g{s}", 0.0 if g is None else g)
        traps.append(Trap3D(omegas, -MASS_RB87 * gs, MASS_RB87))
    return TrapPair(*traps)


def _g_values(sc: Scenario) -> List[float]:
    g = sc.get("trap", "g", 0.1 * G_EARTH)
    return list(g) if isinstance(g, tuple) else [g]


def _as_list(v) -> list:
    return list(v) if isinstance(v, (tuple, list)) else [v]


def _dipole_config(sc: Scenario) -> DipoleTrapConfig:
    d = sc.values.get("dipole", {})
    return DipoleTrapConfig(power=d.get("power", 1.0), waist=d.get("waist", 100e-6),
                            wavelength=d.get("wavelength", 1064e-9), gravity=d.get("gravity", G_EARTH))


def _pair_parameters(pair: TrapPair) -> dict:
    return {f"trap{s}": {"omega_rad_s": list(pair.state(s).omegas), "force_z_N": pair.state(s).axis("z").force,
                         "minimum_z_m": pair.state(s).axis("z").minimum} for s in (1, 2)}


def _dipole_parameters(cfg: DipoleTrapConfig) -> dict:
    return {"power_W": cfg.power, "waist_m": cfg.waist, "wavelength_m": cfg.wavelength, "mass_kg": cfg.mass,
            "gravity_m_s2": cfg.gravity, "kappa": cfg.kappa, "rayleigh_range_m": cfg.rayleigh_range,
            "d_lines": asdict(RB87_DLINES)}


def _label(g: float, dphi: float, dims: int) -> str:
    return f"g{g / G_EARTH:.6g}_dphi{dphi:.6g}_{dims}d"


# -- commands ------------------------------------------------------------------------

def cmd_scan_analytic(ctx: RunContext) -> None:
    sc = ctx.scenario
    T = T_grid(sc)
    state = sc.get("interferometer", "initial_state", 2)
    dphis = _as_list(sc.get("interferometer", "delta_phi", 0.0))
    dims_all = _as_list(sc.get("interferometer", "dims", 3))
    schedule = sc.get("interferometer", "phase_schedule", "constant")
    if schedule not in ("constant", "quadratic"):
        raise ScenarioError("interferometer.phase_schedule: expected 'constant' or 'quadratic'")
    files, pairs = {}, {}
    for g in _g_values(sc):
        pair = _pair(sc, g)
        pairs[f"{g / G_EARTH:.6g}"] = _pair_parameters(pair)
        for dphi in dphis:
            sched = quadratic_phase_schedule(dphi) if schedule == "quadratic" else None
            cfg = MziConfig(pair, state, dphi, sched)
            for dims in dims_all:
                series = scan(cfg, T, dims)
                name = _label(g, dphi, dims)
                files[name] = ctx.interferogram(f"P2_{name}.csv", series)
                if sc.has("shot_noise"):
                    noisy = shot_noise_emulate(series, sc.require("shot_noise", "atoms_per_shot"),
                                               sc.get("shot_noise", "shots", 1), ctx.seed)
                    ctx.interferogram(f"P2_{name}_noisy.csv", noisy)
    p1 = 2 * np.pi / pair.trap1.axis("z").omega
    p2 = 2 * np.pi / pair.trap2.axis("z").omega
    ctx.parameters.update(traps=pairs, initial_state=state, delta_phi_rad=dphis, phase_schedule=schedule)
    ctx.plot("P2.svg", _plot_series(files, vlines=[n * p for p in (p1, p2) for n in range(1, 40)
                                                   if T[0] <= n * p <= T[-1]]))


def _wave_traps(sc: Scenario, g: float):
    """(grid, V1, V2, transversal, pair-or-None, mass) for a harmonic or dipole setup."""
    state = sc.get("interferometer", "initial_state", 2)
    points = sc.get("grid", "points", 256)
    margin = sc.get("grid", "margin", 15e-6)
    if sc.has("dipole"):
        setup = dipole_setup(g / G_EARTH, state, _dipole_config(sc), points, margin)
        V1 = axial_potential(setup.config, setup.g1)
        V2 = axial_potential(setup.config, setup.g2)
        return setup.grid, V1, V2, setup.transversal, None, setup.config.mass
    pair = _pair(sc, g)
    zi, zo = pair.state(state).axis("z").minimum, pair.state(3 - state).axis("z").minimum
    far = 2 * zo - zi
    grid = Grid.around(min(zi, far) - margin, max(zi, far) + margin, points)
    tr = tuple((pair.trap1.axis(a).omega, pair.trap2.axis(a).omega) for a in "xy")
    return (grid, harmonic_potential(pair.trap1.axis("z")), harmonic_potential(pair.trap2.axis("z")),
            tr, pair, pair.mass)


def cmd_scan_wave(ctx: RunContext) -> None:
    sc = ctx.scenario
    T = T_grid(sc)
    state = sc.get("interferometer", "initial_state", 2)
    dphis = _as_list(sc.get("interferometer", "delta_phi", 0.0))
    if len(dphis) != 1:
        raise ScenarioError("interferometer.delta_phi: wave scans take a single value")
    dphi = dphis[0]
    mode = sc.get("pulse", "mode", "instantaneous")
    method = sc.get("grid", "method", "spectral" if mode == "instantaneous" else "split_step")
    if method not in ("spectral", "split_step"):
        raise ScenarioError("grid.method: expected 'spectral' or 'split_step'")
    if method == "spectral" and mode != "instantaneous":
        raise ScenarioError("grid.method: spectral propagation needs pulse.mode = instantaneous")
    gs = list(sc.require("dipole", "g2")) if sc.has("dipole") else _g_values(sc)
    files = {}
    for g in gs:
        grid, V1, V2, tr, pair, mass = _wave_traps(sc, g)
        if method == "spectral":
            series = scan_instant_spectral(grid, V1, V2, T, state, tr, delta_phi=dphi, mass=mass)
        else:
            # quadratic schedule: phi(0) - 2 phi(T) + phi(2T) = delta_phi
            sched = quadratic_phase_schedule(dphi) if dphi else None
            pulse = None
            if mode == "rabi_box":
                pulse = PulseConfig(sc.require("pulse", "rabi_frequency"), phase_schedule=sched)
            cfg = MziWaveConfig(grid, V1, V2, 0.0, mass=mass, initial_state=state, pulse_mode=mode, pulse=pulse,
                                phase_schedule=sched,
                                transversal=tr, dt_free=sc.get("grid", "dt_free"), dt_pulse=sc.get("grid", "dt_pulse"))
            series = scan_wave(cfg, T, ctx.workers)
        name = _label(g, dphi, 1)
        files[name] = ctx.interferogram(f"P2_wave_{name}.csv", series)
        ctx.parameters.setdefault("runs", {})[name] = {
            "grid": grid.describe(), "pulse_mode": mode, "method": method, "transversal_rad_s": tr,
            **({"traps": _pair_parameters(pair)} if pair is not None else {}),
            **{k: v for k, v in series.metadata.items() if isinstance(v, (int, float, str, bool, list, tuple))}}
    if sc.has("dipole"):
        ctx.parameters["dipole"] = _dipole_parameters(_dipole_config(sc))
    ctx.plot("P2_wave.svg", _plot_series(files))


def cmd_characterize_dipole(ctx: RunContext) -> None:
    sc = ctx.scenario
    cfg = _dipole_config(sc)
    gs = _as_list(sc.get("dipole", "g2", (cfg.gravity,)))
    rows = []
    for g in gs:
        c = characterize(cfg, g)
        mism = max(c.max_relative_mismatch().values()) if c.numeric else 0.0
        rows.append([g, c.z0, c.omega_x, c.omega_y, c.omega_z, c.alpha, c.beta, mism])
    ctx.table("characterization.csv", ["g_m_s2", "z0_m", "omega_x_rad_s", "omega_y_rad_s", "omega_z_rad_s",
                                       "alpha_J_m3", "beta_J_m4", "max_rel_mismatch"], rows)
    ctx.parameters["dipole"] = _dipole_parameters(cfg)
    ctx.results["characterization"] = rows

    def draw(ax):
        arr = np.array(rows)
        ax.plot(arr[:, 0] / G_EARTH, arr[:, 4] / (2 * np.pi), "o-")
        ax.set_xlabel("g / g_E")
        ax.set_ylabel("omega_z / 2 pi (Hz)")
    ctx.plot("characterization.svg", draw)


def _extract(series: Interferogram, sc: Scenario) -> tuple:
    threshold = sc.get("extract", "threshold", 0.02)
    # expected periods merge lobes of one resonance and fix the order offsets j
    periods = {QUASI_GAUSSIAN: sc.require("extract", "period_quasi_gaussian"),
               OSCILLATING: sc.require("extract", "period_oscillating")}
    orders = sc.get("extract", "guided_orders")
    if orders is not None:
        centres = sorted((n * periods[k], k) for k in periods for n in orders)
        segs = segment_by_centres(series, centres, threshold)
    else:
        segs = segment_resonances(series, threshold, expected_period=min(periods.values()))
    return segs, periods


def cmd_extract(ctx: RunContext) -> None:
    sc = ctx.scenario
    series = read_interferogram(sc.require("extract", "input"))
    sep = sc.require("extract", "separation")
    state = sc.get("extract", "initial_state", 2)
    segs, periods = _extract(series, sc)
    ctx.table("segments.csv", ["kind", "T_lo_s", "T_hi_s", "center_s", "sign_changes"],
              [[s.kind, s.window[0], s.window[1], s.center, s.sign_changes] for s in segs])
    est = []
    for kind in (QUASI_GAUSSIAN, OSCILLATING):
        items = [s for s in segs if s.kind == kind]
        if len(items) < 2:
            log.warning("only %d %s segments; no estimate", len(items), kind)
            continue
        _, mean, std = correlate_all(items, periods[kind])
        probed = 3 - state if kind == QUASI_GAUSSIAN else state
        est.append(FrequencyEstimate(frequency_from_delay(mean), f"correlation:{kind}:state{probed}", sep))
        ctx.results[f"delay_{kind}_s"] = mean
        ctx.results[f"delay_spread_{kind}_s"] = std
    if not est:
        raise MziTrapError("no resonance family had two or more segments")
    ctx.estimates("estimates.csv", est)

    def draw(ax):
        ax.plot(series.T * 1e3, series.P2 - 0.5, lw=0.6, color="0.3")
        for s in segs:
            ax.axvspan(s.window[0] * 1e3, s.window[1] * 1e3, alpha=0.15,
                       color="tab:blue" if s.kind == QUASI_GAUSSIAN else "tab:orange")
        ax.set_xlabel("T (ms)")
        ax.set_ylabel("P2 - 0.5")
    ctx.plot("segments.svg", draw)


def _fit_rows(fits) -> list:
    rows = []
    for key, f in fits.items():
        k, se = f.k, dict(zip(f.names, f.stderr))
        rows.append([key, f.model, k["k1"], k["k2"], k["k3"], se.get("k1", 0.0), se.get("k2", 0.0),
                     se.get("k3", 0.0), f.condition_number])
    return rows


_FIT_HEADER = ["source", "model", "k1_rad_s", "k2_rad_s_m", "k3_rad_s_m2", "k1_stderr", "k2_stderr",
               "k3_stderr", "condition_number"]


def _plot_fits(estimates, fits):
    def draw(ax):
        for key, f in fits.items():
            pts = [e for e in estimates if key.endswith(e.source.split(":", 1)[-1]) or e.source == key]
            dz = np.array([e.separation for e in pts])
            ax.plot(dz * 1e6, [e.omega / (2 * np.pi) for e in pts], "o", ms=3)
            x = np.linspace(0.0, dz.max() if dz.size else 1e-6, 100)
            ax.plot(x * 1e6, f(x) / (2 * np.pi), lw=0.8, label=key)
        ax.set_xlabel("|z01 - z02| (um)")
        ax.set_ylabel("omega / 2 pi (Hz)")
        ax.legend(fontsize=6)
    return draw


def cmd_fit(ctx: RunContext) -> None:
    sc = ctx.scenario
    if sc.kind == "fit_pipeline":
        return _fit_pipeline(ctx)
    est = read_estimates(sc.require("fit", "input"))
    model = sc.get("fit", "model", "auto")
    groups: Dict[str, List[FrequencyEstimate]] = {}
    for e in est:
        groups.setdefault(e.source, []).append(e)
    fits = {}
    for key, items in sorted(groups.items()):
        m = ("k1_k3" if key.endswith("state1") else "k1_k2_k3") if model == "auto" else model
        fits[key] = fit_frequencies(items, m, weighted=False)
    ctx.table("fits.csv", _FIT_HEADER, _fit_rows(fits))
    ctx.results["intercepts_rad_s"] = {k: f.intercept for k, f in fits.items()}
    ctx.results["intercept_mean_rad_s"] = float(np.mean([f.intercept for f in fits.values()]))
    ref = sc.get("fit", "reference_omega")
    if ref is not None:
        amu = scipy.constants.atomic_mass
        mass = sc.get("fit", "mass_amu", MASS_RB87 / amu) * amu
        bounds = {}
        for key, f in fits.items():
            if f.model == "k1_k3" and f.k["k3"] <= 0:
                b = anharmonicity_bounds(f.k["k3"], mass, ref)
                bounds[key] = {"alpha_max_J_m3": b.alpha_max, "beta_max_J_m4": b.beta_max}
        ctx.results["bounds"] = bounds
    ctx.plot("fits.svg", _plot_fits(est, fits))


def _fit_pipeline(ctx: RunContext) -> None:
    sc = ctx.scenario
    cfg = _dipole_config(sc)
    g2 = [g / G_EARTH for g in sc.get("dipole", "g2", tuple(f * G_EARTH for f in DEFAULT_G2))]
    states = sc.get("dipole", "initial_states", (1, 2))
    res = run_pipeline(g2, states, cfg, sc.get("dipole", "dt", 2e-6), ctx.workers,
                       sc.get("dipole", "grid_points", 256))
    # prefix the initial state so that the four families stay distinguishable
    est = [FrequencyEstimate(e.omega, f"start{an.setup.initial_state}:{e.source.split(':', 1)[1]}",
                             e.separation, e.uncertainty) for an in res.analyses for e in an.estimates]
    ctx.estimates("estimates.csv", est)
    ctx.table("fits.csv", _FIT_HEADER, _fit_rows(res.fits))
    ctx.parameters["dipole"] = _dipole_parameters(cfg)
    ctx.parameters.update(g2_over_gE=g2, initial_states=list(states), method="spectral 1D, transversal factorized")
    ctx.results.update(
        intercepts_rad_s={k: f.intercept for k, f in res.fits.items()},
        intercept_mean_rad_s=res.intercept_mean,
        omega_reference_rad_s=res.omega_reference,
        relative_deviation=res.relative_deviation,
        bounds=None if res.bounds is None else {"alpha_max_J_m3": res.bounds.alpha_max,
                                                 "beta_max_J_m4": res.bounds.beta_max})
    ctx.plot("fits.svg", _plot_fits(est, res.fits))


COMMANDS = {
    "scan-analytic": ("analytic_scan", cmd_scan_analytic),
    "scan-wave": ("wave_scan", cmd_scan_wave),
    "characterize-dipole": ("dipole_characterize", cmd_characterize_dipole),
    "extract": ("extract", cmd_extract),
    "fit": (("fit", "fit_pipeline"), cmd_fit),
}
_BY_KIND = {"analytic_scan": cmd_scan_analytic, "wave_scan": cmd_scan_wave,
            "dipole_characterize": cmd_characterize_dipole, "extract": cmd_extract,
            "fit": cmd_fit, "fit_pipeline": cmd_fit}


def _manifest(ctx: RunContext, command: str, wall: float) -> dict:
    sc = ctx.scenario
    files = {}
    for name in ctx.outputs:
        files[name] = hashlib.sha256(ctx.path(name).read_bytes()).hexdigest()
    return {
        "command": command,
        "scenario_path": str(sc.path) if sc.path else None,
        "scenario_kind": sc.kind,
        "seed": ctx.seed,
        "workers": ctx.workers,
        "versions": {"mzitrap": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "scenario_raw": {k: dict(v) for k, v in sc.raw.items()},
        "scenario_si": {k: {kk: (str(vv) if isinstance(vv, Path) else vv) for kk, vv in v.items()}
                        for k, v in sc.values.items()},
        "constants": asdict(CONSTANTS),
        "parameters": ctx.parameters,
        "results": ctx.results,
        "outputs_sha256": files,
        "plots": ctx.plots,
        "plot_errors": ctx.plot_errors,
        "wall_time_s": wall,
    }


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    return repr(o)


def run_scenario(scenario: Scenario, out, workers: Optional[int] = None, seed: Optional[int] = None,
                 command: Optional[str] = None) -> dict:
    """Run a scenario into directory ``out`` and return its manifest."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if seed is not None:
        scenario = scenario.with_seed(seed)
    ctx = RunContext(scenario, out, workers or default_workers(), scenario.seed)
    t0 = time.perf_counter()
    _BY_KIND[scenario.kind](ctx)
    manifest = _manifest(ctx, command or scenario.kind, time.perf_counter() - t0)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return manifest


def bundled_scenario(name: str) -> Scenario:
    text = resources.files("mzitrap").joinpath("scenarios", name).read_text(encoding="utf-8")
    return parse_scenario(text)


# -- figure reproductions ------------------------------------------------------------------

def _reproduce(fig: str, out: Path, workers: int, seed: Optional[int]) -> dict:
    if fig == "fig2c":
        return run_scenario(bundled_scenario("table1_signal.scenario"), out, workers, seed, "reproduce fig2c")
    if fig == "fig4b":
        return run_scenario(bundled_scenario("dipole_fig4b.scenario"), out, workers, seed, "reproduce fig4b")
    if fig == "fig3":
        manifest = run_scenario(bundled_scenario("table1_crossing.scenario"), out, workers, seed,
                                "reproduce fig3")
        sc = bundled_scenario("table1_crossing.scenario")
        cfgs = [MziConfig(_pair(sc, g), 2, np.pi / 2) for g in _g_values(sc)]
        T = T_grid(sc)
        a, b = scan(cfgs[0], T, 3), scan(cfgs[1], T, 3)
        P2 = 2 * np.pi / cfgs[0].pair.trap2.axis("z").omega
        Tc = find_crossing(a, b, (4.95 * P2, 5.05 * P2))
        manifest["results"]["crossing_s"] = Tc
        manifest["results"]["crossing_minus_5T2_s"] = Tc - 5 * P2
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
        return manifest
    if fig == "fig4a":
        return _reproduce_fig4a(out, workers, seed)
    if fig == "figS2":
        return _reproduce_figS2(out, workers, seed)
    raise ScenarioError(f"unknown figure id {fig!r} (choose from {', '.join(FIGURES)})")


def _reproduce_fig4a(out: Path, workers: int, seed: Optional[int]) -> dict:
    sc = parse_scenario("[scenario]\nkind = wave_scan\n[scan]\nt_start_ms = 9.5\nt_stop_ms = 14.64\n"
                        "points = 2\n[pulse]\nmode = rabi_box\nrabi_frequency_khz = 25\n")
    ctx = RunContext(sc if seed is None else sc.with_seed(seed), out, workers, seed or 0)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files = {}
    pulse = PulseConfig(2 * np.pi * 25e3)
    shift = pulse.tau_half_pi / 2 + pulse.tau_pi / 2
    for gf, points in ((0.1, 256), (1.0, 512)):
        pair = table1_pair(gf)
        t1, t2 = pair.trap1.axis("z"), pair.trap2.axis("z")
        far = 2 * t1.minimum - t2.minimum
        grid = Grid.around(min(far, t2.minimum) - 15e-6, max(far, t2.minimum) + 15e-6, points)
        tr = tuple((pair.trap1.axis(a).omega, pair.trap2.axis(a).omega) for a in "xy")
        cfg = MziWaveConfig(grid, harmonic_potential(t1), harmonic_potential(t2), 0.0, pulse_mode="rabi_box",
                            pulse=pulse, transversal=tr, dt_free=2 * np.pi / t1.omega / 400)
        T = np.concatenate([p + np.linspace(-0.5e-3, 0.5e-3, 41) for p in (t2.period, t1.period)])
        wave = scan_wave(cfg, T, workers)
        ana = Interferogram(T, signal_3d(T + shift, MziConfig(pair, 2, 0.0)))
        files[f"rabi_g{gf:g}"] = ctx.interferogram(f"P2_rabi_g{gf:g}.csv", wave)
        files[f"analytic_g{gf:g}"] = ctx.interferogram(f"P2_analytic_g{gf:g}.csv", ana)
        ctx.results[f"max_abs_deviation_g{gf:g}"] = float(np.max(np.abs(wave.P2 - ana.P2)))
        ctx.results[f"peak_T2_window_g{gf:g}"] = float(wave.P2[:41].max())
        ctx.results[f"peak_T1_window_g{gf:g}"] = float(wave.P2[41:].max())
        ctx.parameters[f"g{gf:g}"] = {"grid": grid.describe(), "traps": _pair_parameters(pair),
                                      "rabi_frequency_rad_s": pulse.rabi_frequency,
                                      "analytic_time_shift_s": shift}
    ctx.plot("P2_rabi.svg", _plot_series(files))
    manifest = _manifest(ctx, "reproduce fig4a", time.perf_counter() - t0)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return manifest


def _reproduce_figS2(out: Path, workers: int, seed: Optional[int]) -> dict:
    sc = parse_scenario("[scenario]\nkind = extract\n[dipole]\ng2_ge = 0.8\ninitial_states = 2\n")
    ctx = RunContext(sc if seed is None else sc.with_seed(seed), out, workers, seed or 0)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    an = analyse_configuration(0.8, 2)
    shifted = Interferogram(an.series.T, an.series.P2)
    ctx.interferogram("P2_dipole_g0.8_start2.csv", shifted)
    segs = [s for kind in (QUASI_GAUSSIAN, OSCILLATING) for s in an.segments[kind]]
    ctx.table("segments.csv", ["kind", "T_lo_s", "T_hi_s", "center_s", "sign_changes"],
              [[s.kind, s.window[0], s.window[1], s.center, s.sign_changes] for s in sorted(segs, key=lambda s: s.center)])
    ctx.estimates("estimates.csv", an.estimates)
    ctx.results.update(delays_s=an.delays, delay_spread_s=an.delay_spread,
                       omega_over_2pi_hz={e.source: e.omega / (2 * np.pi) for e in an.estimates})
    ctx.parameters.update(dipole=_dipole_parameters(an.setup.config), grid=an.setup.grid.describe(),
                          transversal_rad_s=an.setup.transversal, separation_m=an.setup.separation)

    def draw(ax):
        ax.plot(shifted.T * 1e3, shifted.P2 - 0.5, lw=0.6, color="0.3")
        for s in segs:
            ax.axvspan(s.window[0] * 1e3, s.window[1] * 1e3, alpha=0.15,
                       color="tab:blue" if s.kind == QUASI_GAUSSIAN else "tab:orange")
        ax.set_xlabel("T (ms)")
        ax.set_ylabel("P2 - 0.5")
    ctx.plot("P2_shifted.svg", draw)
    manifest = _manifest(ctx, "reproduce figS2", time.perf_counter() - t0)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return manifest


# -- entry point -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--workers", type=int, default=None,
                        help="parallel workers (default: $MZITRAP_WORKERS or 1)")
    common.add_argument("--seed", type=int, default=None, help="seed for shot-noise emulation (u64)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="mzitrap", description="Trap-frequency interferometry toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--scenario", required=True, help="scenario file (INI)")
    p = sub.add_parser("reproduce", parents=[common], help="regenerate the data behind a figure")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--scenario", default=None, help="ignored; figures use bundled settings")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be positive", file=sys.stderr)
        return 2
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    workers = args.workers or default_workers()
    out = Path(args.out)
    try:
        if args.command == "reproduce":
            _reproduce(args.figure, out, workers, args.seed)
        else:
            kinds, _ = COMMANDS[args.command]
            sc = load_scenario(args.scenario)
            if sc.kind not in (kinds if isinstance(kinds, tuple) else (kinds,)):
                raise ScenarioError(f"scenario.kind: '{sc.kind}' cannot be run by '{args.command}'")
            run_scenario(sc, out, workers, args.seed, args.command)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MziTrapError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}/manifest.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
