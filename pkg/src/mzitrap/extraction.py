"""Trap frequencies and anharmonicity bounds from interferometer signals.

The shifted signal ``P2 - 0.5`` is split into individual resonances, which
are classified as quasi-Gaussian (single-signed peaks) or oscillating.
Resonances of the same kind are compared by a normalized cross-correlation
whose peak gives the delay per period, ``omega = 2 pi / tau``. Frequencies
measured at several trap separations are fitted by low-order polynomials
and extrapolated to zero separation; the curvature of the fit bounds the
cubic and quartic coefficients of the potential.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateSegment, IllConditioned, PositiveCurvature, Underdetermined
from .mzi import Interferogram

__all__ = [
    "QUASI_GAUSSIAN",
    "OSCILLATING",
    "ResonanceSegment",
    "CorrelationResult",
    "FrequencyEstimate",
    "FitResult",
    "AnharmonicityBounds",
    "segment_resonances",
    "segment_by_centres",
    "count_sign_changes",
    "cross_correlate",
    "correlate_all",
    "frequency_from_delay",
    "fit_frequencies",
    "anharmonicity_bounds",
    "period_from_crossings",
    "MODELS",
]

QUASI_GAUSSIAN = "quasi_gaussian"
OSCILLATING = "oscillating"
MODELS = ("k1_k2_k3", "k1_k3")


@dataclass(frozen=True)
class ResonanceSegment:
    """One resonance of a shifted interferogram.

    ``values`` holds ``P2 - 0.5`` sampled at ``T`` (uniform spacing).
    """

    kind: str
    T: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    sign_changes: int = 0

    @property
    def window(self) -> Tuple[float, float]:
        return float(self.T[0]), float(self.T[-1])

    @property
    def center(self) -> float:
        """Weighted centre ``sum T f^2 / sum f^2``."""
        w = self.values**2
        return float(np.sum(self.T * w) / np.sum(w))

    @property
    def spacing(self) -> float:
        return float(self.T[1] - self.T[0]) if self.T.size > 1 else 0.0


@dataclass(frozen=True)
class CorrelationResult:
    tau: float
    peak: float
    j: int


@dataclass(frozen=True)
class FrequencyEstimate:
    omega: float
    source: str
    separation: float
    uncertainty: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of ``omega(dz)``.

    ``coefficients`` are ``(k1, k2, k3)`` for ``'k1_k2_k3'`` and ``(k1, k3)``
    for ``'k1_k3'``; :attr:`k` maps names to values for either model.
    """

    model: str
    coefficients: np.ndarray
    covariance: np.ndarray
    residuals: np.ndarray
    condition_number: float

    @property
    def names(self) -> Tuple[str, ...]:
        return ("k1", "k2", "k3") if self.model == "k1_k2_k3" else ("k1", "k3")

    @property
    def k(self) -> Dict[str, float]:
        out = {"k1": 0.0, "k2": 0.0, "k3": 0.0}
        out.update(dict(zip(self.names, map(float, self.coefficients))))
        return out

    @property
    def intercept(self) -> float:
        """Extrapolated ``omega`` at zero separation."""
        return float(self.coefficients[0])

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def __call__(self, dz):
        k = self.k
        dz = np.asarray(dz, dtype=float)
        return k["k1"] + k["k2"] * dz + k["k3"] * dz**2


@dataclass(frozen=True)
class AnharmonicityBounds:
    alpha_max: float
    beta_max: float
    degenerate: bool = False

    def contains(self, alpha: float, beta: float) -> bool:
        return abs(alpha) <= self.alpha_max and abs(beta) <= self.beta_max


def count_sign_changes(values, floor: float = 0.0) -> int:
    """Sign alternations among samples with ``|v| > floor``."""
    v = np.asarray(values, dtype=float)
    s = np.sign(v[np.abs(v) > floor])
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def segment_resonances(series: Interferogram, threshold: float = 0.02,
                       expected_period: Optional[float] = None, merge_fraction: float = 0.05,
                       pad_fraction: float = 0.25, min_sign_changes: int = 3,
                       keep_truncated: bool = False) -> List[ResonanceSegment]:
    """Split ``P2 - 0.5`` into individual resonances.

    Samples with ``|P2 - 0.5| > threshold`` form runs. Runs separated by
    less than ``merge_fraction * expected_period`` are merged (no merging
    without ``expected_period``). Each window is widened by ``pad_fraction``
    of its width on both sides, never past the midpoint to a neighbour. A
    segment is oscillating when its supra-threshold samples change sign at
    least ``min_sign_changes`` times, otherwise quasi-Gaussian. Resonances
    whose padded window extends past either end of the series are cut off
    and are dropped unless ``keep_truncated``.
    """
    T, d = series.T, series.P2 - 0.5
    if T.size == 0:
        return []
    hot = np.flatnonzero(np.abs(d) > threshold)
    if hot.size == 0:
        return []
    gap = merge_fraction * expected_period if expected_period else 0.0
    runs = [[hot[0], hot[0]]]
    for i in hot[1:]:
        if i == runs[-1][1] + 1 or T[i] - T[runs[-1][1]] < gap:
            runs[-1][1] = i
        else:
            runs.append([i, i])
    bounds = []
    for k, (a, b) in enumerate(runs):
        pad = pad_fraction * (T[b] - T[a])
        lo_lim = 0.5 * (T[runs[k - 1][1]] + T[a]) if k > 0 else T[0]
        hi_lim = 0.5 * (T[b] + T[runs[k + 1][0]]) if k + 1 < len(runs) else T[-1]
        if not keep_truncated and (T[a] - pad < T[0] or T[b] + pad > T[-1]):
            continue
        lo, hi = max(T[a] - pad, lo_lim), min(T[b] + pad, hi_lim)
        bounds.append((np.searchsorted(T, lo, "left"), np.searchsorted(T, hi, "right")))
    out = []
    for a, b in bounds:
        vals = d[a:b]
        n = count_sign_changes(vals, threshold)
        kind = OSCILLATING if n >= min_sign_changes else QUASI_GAUSSIAN
        out.append(ResonanceSegment(kind, T[a:b].copy(), vals.copy(), n))
    return out


def segment_by_centres(series: Interferogram, centres: Sequence[Tuple[float, str]],
                       threshold: float = 0.02) -> List[ResonanceSegment]:
    """Split a series at midpoints between predicted resonance centres.

    ``centres`` are ``(T, kind)`` pairs, e.g. multiples of Taylor-model
    periods. Used when neighbouring resonances overlap so that the signal
    never returns below the segmentation threshold. The first and last
    centres only bound their neighbours and yield no segment.
    """
    cs = sorted(centres)
    T, d = series.T, series.P2 - 0.5
    out = []
    for i in range(1, len(cs) - 1):
        a = 0.5 * (cs[i - 1][0] + cs[i][0])
        b = 0.5 * (cs[i][0] + cs[i + 1][0])
        m = (T >= a) & (T <= b)
        if np.count_nonzero(m) < 3:
            continue
        out.append(ResonanceSegment(cs[i][1], T[m].copy(), d[m].copy(),
                                    count_sign_changes(d[m], threshold)))
    return out


def _resample(seg: ResonanceSegment, dT: float) -> np.ndarray:
    n = int(np.floor((seg.T[-1] - seg.T[0]) / dT + 1e-9)) + 1
    t = seg.T[0] + dT * np.arange(n)
    return np.interp(t, seg.T, seg.values)


def cross_correlate(f: ResonanceSegment, g: ResonanceSegment, j: int = 1) -> CorrelationResult:
    """Peak of ``R_j(tau) = int f(T) g(T + j tau) dT / sqrt(int f^2 int g^2)``.

    Both segments are placed on a common uniform grid (the finer spacing)
    and zero-extended, so the trapezoid rule reduces to a plain sum. The
    discrete maximum over lags is refined by a 3-point parabola; ``tau`` is
    the absolute shift divided by ``j``.

    Raises
    ------
    DegenerateSegment
        If either segment has zero energy.
    """
    if j < 1:
        raise ValueError("j must be a positive integer")
    dT = min(x for x in (f.spacing, g.spacing) if x > 0) if max(f.spacing, g.spacing) > 0 else 1.0
    a = _resample(f, dT) if f.T.size > 1 else np.asarray(f.values, dtype=float)
    b = _resample(g, dT) if g.T.size > 1 else np.asarray(g.values, dtype=float)
    ea, eb = float(np.sum(a * a)), float(np.sum(b * b))
    if ea == 0.0 or eb == 0.0:
        raise DegenerateSegment("segment has zero energy")
    c = np.correlate(b, a, "full") / np.sqrt(ea * eb)
    lags = np.arange(-(a.size - 1), b.size)
    k = int(np.argmax(c))
    off = 0.0
    if 0 < k < c.size - 1:
        y0, y1, y2 = c[k - 1], c[k], c[k + 1]
        den = y0 - 2 * y1 + y2
        if den < 0:
            off = 0.5 * (y0 - y2) / den
    peak = float(c[k] - 0.25 * (c[k - 1] - c[k + 1]) * off) if off else float(c[k])
    shift = (g.T[0] - f.T[0]) + (lags[k] + off) * dT
    return CorrelationResult(float(shift / j), min(peak, 1.0), int(j))


def correlate_all(segments: Sequence[ResonanceSegment], period_guess: float):
    """Cross-correlate every pair; ``j`` is the rounded centre distance in periods.

    Returns the list of per-pair results and the mean and standard deviation
    of the delays.
    """
    results = []
    for f, g in combinations(sorted(segments, key=lambda s: s.center), 2):
        j = int(round((g.center - f.center) / period_guess))
        if j < 1:
            continue
        results.append(cross_correlate(f, g, j))
    if not results:
        raise Underdetermined("need at least two resonances a period apart")
    taus = np.array([r.tau for r in results])
    return results, float(taus.mean()), float(taus.std(ddof=1)) if taus.size > 1 else 0.0


def frequency_from_delay(tau) -> float:
    """``omega = 2 pi / tau``."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("delay must be positive")
    out = 2 * np.pi / tau
    return out if out.ndim else float(out)


def fit_frequencies(estimates: Sequence[FrequencyEstimate], model: str = "k1_k2_k3",
                    max_condition: float = 1e10, weighted: Optional[bool] = None) -> FitResult:
    """Ordinary (or uncertainty-weighted) least squares of ``omega`` against ``dz``.

    Columns are scaled by the largest ``|dz|`` before solving. By default
    points are weighted by ``1 / uncertainty^2`` only if every estimate
    carries one; ``weighted=False`` forces uniform weights.

    Raises
    ------
    Underdetermined
        Fewer points or distinct separations than parameters.
    IllConditioned
        Scaled design matrix condition number above ``max_condition``.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    dz = np.array([e.separation for e in estimates], dtype=float)
    y = np.array([e.omega for e in estimates], dtype=float)
    powers = (0, 1, 2) if model == "k1_k2_k3" else (0, 2)
    p = len(powers)
    if dz.size < p or np.unique(dz).size < p:
        raise Underdetermined(f"model {model} needs {p} distinct separations, got {np.unique(dz).size}")
    scale = float(np.max(np.abs(dz))) or 1.0
    X = np.stack([(dz / scale) ** k for k in powers], axis=1)
    unc = np.array([e.uncertainty for e in estimates], dtype=float)
    use_w = bool(np.all(unc > 0)) if weighted is None else (weighted and bool(np.all(unc > 0)))
    if weighted and not use_w:
        raise ValueError("weighted fit needs a positive uncertainty for every estimate")
    w = 1.0 / unc if use_w else np.ones_like(y)
    Xw, yw = X * w[:, None], y * w
    cond = float(np.linalg.cond(Xw))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditioned(f"design matrix condition number {cond:.3g}", cond)
    coef, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    resid = y - X @ coef
    dof = y.size - p
    XtX_inv = np.linalg.inv(Xw.T @ Xw)
    if use_w:
        cov = XtX_inv
    else:
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = s2 * XtX_inv
    unscale = np.array([scale ** -k for k in powers])
    coef = coef * unscale
    cov = cov * np.outer(unscale, unscale)
    return FitResult(model, coef, cov, resid, cond)


def anharmonicity_bounds(k3: float, mass: float, omega_z: float) -> AnharmonicityBounds:
    """Upper bounds on ``|alpha|`` and ``|beta|`` from a negative curvature ``k3``.

    With ``omega(dz) ~ omega_z + omega_z (3 beta / 2 - 15 alpha^2 / (4 m w^2)) dz^2 / (m w^2)``
    and ``beta < 0`` both terms are negative, so ``alpha^2 < 4 m^2 w^3 |k3| / 15``
    and ``|beta| < 2 m w |k3| / 3``.

    Raises
    ------
    PositiveCurvature
        If ``k3 > 0``; the argument needs a downward frequency shift.
    """
    if k3 > 0:
        raise PositiveCurvature("k3 > 0: bounds need a negative curvature")
    a = abs(k3)
    return AnharmonicityBounds(float(np.sqrt(4 * mass**2 * omega_z**3 * a / 15)),
                               float(2 * mass * omega_z * a / 3), degenerate=(k3 == 0))


def period_from_crossings(crossing_times: Sequence[float],
                          indices: Optional[Sequence[int]] = None) -> Tuple[float, float]:
    """Period from neighbouring crossings, ``mean(diff(T) / diff(n))``.

    Differencing removes any common offset such as the finite-pulse shift.
    Returns the period and the standard error of the mean (zero for two
    crossings).

    Raises
    ------
    Underdetermined
        With fewer than two crossings.
    """
    t = np.asarray(crossing_times, dtype=float)
    if t.size < 2:
        raise Underdetermined("need at least two crossings")
    n = np.arange(t.size) if indices is None else np.asarray(indices, dtype=float)
    gaps = np.diff(n)
    if np.any(gaps <= 0):
        raise ValueError("crossing indices must increase")
    per = np.diff(t) / gaps
    err = float(per.std(ddof=1) / np.sqrt(per.size)) if per.size > 1 else 0.0
    return float(per.mean()), err
