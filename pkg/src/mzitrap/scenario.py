"""Declarative scenario files.

Scenarios are INI files. Every physical quantity carries its unit in the key
name (``t_start_ms``, ``rabi_frequency_khz``, ``waist_um``, ``g2_ge``) and is
converted to SI on ingestion; frequencies given in Hz are cyclic and become
angular (rad/s). Unknown keys, unknown units and unparsable values raise
:class:`~mzitrap.errors.ScenarioError` naming the offending ``section.key``.

Example::

    [scenario]
    kind = analytic_scan
    seed = 7

    [trap]
    preset = table1
    g_ge = 0.1

    [scan]
    t_start_ms = 0.5
    t_stop_ms = 30
    points = 10000
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from .constants import G_EARTH
from .errors import ScenarioError

__all__ = ["Scenario", "KINDS", "UNITS", "SCHEMA", "load_scenario", "parse_scenario", "T_grid"]

KINDS = ("analytic_scan", "wave_scan", "dipole_characterize", "extract", "fit", "fit_pipeline")

TWO_PI = 2 * np.pi

# dimension -> {suffix: factor to SI}
UNITS: Dict[str, Dict[str, float]] = {
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6},
    "frequency": {"hz": TWO_PI, "khz": TWO_PI * 1e3, "rad_s": 1.0},
    "length": {"m": 1.0, "um": 1e-6, "nm": 1e-9},
    "power": {"w": 1.0, "mw": 1e-3},
    "acceleration": {"ge": G_EARTH, "m_s2": 1.0},
    "angle": {"rad": 1.0, "deg": np.pi / 180},
}

# section -> {base name: type}; "list:" prefixes comma separated values
SCHEMA: Dict[str, Dict[str, str]] = {
    "scenario": {"kind": "str", "seed": "int", "description": "str"},
    "trap": {
        "preset": "str", "g": "list:acceleration", "g1": "acceleration", "g2": "acceleration",
        "transversal": "bool",
        "omega1_x": "frequency", "omega1_y": "frequency", "omega1_z": "frequency",
        "omega2_x": "frequency", "omega2_y": "frequency", "omega2_z": "frequency",
    },
    "interferometer": {
        "initial_state": "int", "delta_phi": "list:angle", "phase_schedule": "str", "dims": "list:int",
    },
    "pulse": {"mode": "str", "rabi_frequency": "frequency"},
    "scan": {"t_start": "time", "t_stop": "time", "t_step": "time", "points": "int"},
    "grid": {"points": "int", "margin": "length", "dt_free": "time", "dt_pulse": "time",
             "method": "str"},
    "dipole": {
        "power": "power", "waist": "length", "wavelength": "length", "gravity": "acceleration",
        "g2": "list:acceleration", "initial_states": "list:int", "grid_points": "int",
        "dt": "time", "half_width": "int",
    },
    "extract": {
        "input": "path", "separation": "length", "threshold": "float",
        "period_quasi_gaussian": "time", "period_oscillating": "time", "guided_orders": "list:int",
        "initial_state": "int",
    },
    "fit": {"input": "path", "model": "str", "reference_omega": "frequency", "mass_amu": "float"},
    "shot_noise": {"atoms_per_shot": "int", "shots": "int"},
    "output": {"plots": "bool", "prefix": "str"},
}

_BOOL = {"1": True, "yes": True, "true": True, "on": True, "0": False, "no": False, "false": False, "off": False}


@dataclass(frozen=True)
class Scenario:
    """Validated scenario with all quantities in SI units.

    ``values[section][base]`` holds converted values; ``raw`` keeps the
    original text for the manifest.
    """

    kind: str
    seed: int
    path: Optional[Path]
    values: Mapping[str, Mapping[str, Any]]
    raw: Mapping[str, Mapping[str, str]] = field(repr=False)

    def has(self, section: str, key: Optional[str] = None) -> bool:
        sec = self.values.get(section)
        return sec is not None and (key is None or key in sec)

    def get(self, section: str, key: str, default: Any = None) -> Any:
        return self.values.get(section, {}).get(key, default)

    def require(self, section: str, key: str) -> Any:
        if not self.has(section, key):
            raise ScenarioError(f"{section}.{key}: required for kind '{self.kind}'")
        return self.values[section][key]

    def with_seed(self, seed: int) -> "Scenario":
        return Scenario(self.kind, int(seed), self.path, self.values, self.raw)


def _split_key(section: str, key: str) -> Tuple[str, str, float]:
    """``(base, type, factor)`` for a key such as ``t_start_ms``."""
    schema = SCHEMA[section]
    if key in schema and schema[key].split(":")[-1] not in UNITS:
        return key, schema[key], 1.0
    for base, typ in schema.items():
        dim = typ.split(":")[-1]
        if dim in UNITS and key.startswith(base + "_"):
            suffix = key[len(base) + 1:]
            if suffix in UNITS[dim]:
                return base, typ, UNITS[dim][suffix]
            raise ScenarioError(f"{section}.{key}: unknown unit '{suffix}' for a {dim} "
                                f"(use one of {', '.join(UNITS[dim])})")
    if key in schema:
        dim = schema[key].split(":")[-1]
        raise ScenarioError(f"{section}.{key}: missing unit suffix (use one of {', '.join(UNITS[dim])})")
    raise ScenarioError(f"{section}.{key}: unknown key")


def _convert(section: str, key: str, text: str, typ: str, factor: float, base_dir: Optional[Path]):
    where = f"{section}.{key}"
    if typ.startswith("list:"):
        items = [t.strip() for t in text.split(",") if t.strip()]
        if not items:
            raise ScenarioError(f"{where}: empty list")
        return tuple(_convert(section, key, t, typ[5:], factor, base_dir) for t in items)
    try:
        if typ == "int":
            return int(text)
        if typ == "bool":
            return _BOOL[text.strip().lower()]
        if typ == "str":
            return text.strip()
        if typ == "path":
            p = Path(text.strip())
            if not p.is_absolute() and base_dir is not None:
                p = base_dir / p
            if not p.exists():
                raise ScenarioError(f"{where}: referenced file '{p}' does not exist")
            return p
        value = float(text)
    except (ValueError, KeyError):
        raise ScenarioError(f"{where}: cannot parse '{text}' as {typ}") from None
    if not np.isfinite(value):
        raise ScenarioError(f"{where}: value must be finite")
    return value * factor


def parse_scenario(text: str, path: Optional[Path] = None) -> Scenario:
    """Parse and validate scenario text; ``path`` anchors relative file references."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from None
    base_dir = path.parent if path is not None else None
    values: Dict[str, Dict[str, Any]] = {}
    raw: Dict[str, Dict[str, str]] = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ScenarioError(f"[{section}]: unknown section")
        values[section], raw[section] = {}, dict(cp[section])
        for key, text_value in cp[section].items():
            base, typ, factor = _split_key(section, key)
            if base in values[section]:
                raise ScenarioError(f"{section}.{key}: '{base}' given more than once")
            values[section][base] = _convert(section, key, text_value, typ, factor, base_dir)
    kind = values.get("scenario", {}).get("kind")
    if kind not in KINDS:
        raise ScenarioError(f"scenario.kind: expected one of {', '.join(KINDS)}, got {kind!r}")
    seed = values["scenario"].get("seed", 0)
    if seed < 0:
        raise ScenarioError("scenario.seed: must be non-negative")
    frozen = MappingProxyType({k: MappingProxyType(v) for k, v in values.items()})
    sc = Scenario(kind, seed, path, frozen, MappingProxyType(raw))
    if sc.has("scan"):
        T_grid(sc)
    return sc


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file '{path}' does not exist")
    return parse_scenario(path.read_text(encoding="utf-8"), path)


def T_grid(sc: Scenario) -> np.ndarray:
    """Uniform ``T`` samples from ``[scan]`` (either ``points`` or ``t_step``)."""
    lo, hi = sc.require("scan", "t_start"), sc.require("scan", "t_stop")
    if not 0 <= lo < hi:
        raise ScenarioError("scan.t_start/t_stop: need 0 <= t_start < t_stop")
    if sc.has("scan", "points") == sc.has("scan", "t_step"):
        raise ScenarioError("scan.points/t_step: give exactly one of them")
    if sc.has("scan", "points"):
        n = sc.get("scan", "points")
        if n < 2:
            raise ScenarioError("scan.points: need at least 2")
        return np.linspace(lo, hi, n)
    step = sc.get("scan", "t_step")
    if not step > 0:
        raise ScenarioError("scan.t_step: must be positive")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)
