import numpy as np
import pytest
from hypothesis import given, strategies as st

from mzitrap.constants import MASS_RB87
from mzitrap.errors import (
    DegenerateSegment,
    IllConditioned,
    PositiveCurvature,
    Underdetermined,
)
from mzitrap.extraction import (
    OSCILLATING,
    QUASI_GAUSSIAN,
    FrequencyEstimate,
    ResonanceSegment,
    anharmonicity_bounds,
    correlate_all,
    count_sign_changes,
    cross_correlate,
    fit_frequencies,
    frequency_from_delay,
    period_from_crossings,
    segment_by_centres,
    segment_resonances,
)
from mzitrap.mzi import Interferogram, MziConfig, find_crossing, scan
from mzitrap.trapmodel import table1_pair
from oracles import normal_equations

TWO_PI = 2 * np.pi


def bump(T, c, w, a=0.3):
    return a * np.exp(-0.5 * ((T - c) / w) ** 2)


def seg(T, v, kind=QUASI_GAUSSIAN):
    return ResonanceSegment(kind, np.asarray(T, float), np.asarray(v, float))


# segmentation --------------------------------------------------------------

def test_flat_series_gives_no_segments():
    T = np.linspace(0, 1, 101)
    assert segment_resonances(Interferogram(T, np.full(101, 0.5))) == []
    assert segment_resonances(Interferogram([], [])) == []


def test_two_bumps():
    T = np.linspace(0, 10, 2001)
    osc = 0.3 * np.exp(-0.5 * ((T - 7) / 0.3) ** 2) * np.cos(20 * (T - 7))
    s = segment_resonances(Interferogram(T, 0.5 + bump(T, 3, 0.2) + osc), expected_period=4.0)
    assert [x.kind for x in s] == [QUASI_GAUSSIAN, OSCILLATING]
    lo, hi = s[0].window
    assert lo < 3 - 0.2 < 3 + 0.2 < hi and hi < 5
    lo, hi = s[1].window
    assert 5 < lo < 7 - 0.5 and hi > 7 + 0.5
    assert s[0].center == pytest.approx(3.0, abs=0.01)


def test_truncated_resonances_dropped():
    T = np.linspace(0, 10, 2001)
    P = 0.5 + bump(T, 0.05, 0.2) + bump(T, 5, 0.2)
    assert len(segment_resonances(Interferogram(T, P))) == 1
    assert len(segment_resonances(Interferogram(T, P), keep_truncated=True)) == 2


def test_segment_by_centres():
    T = np.linspace(0, 10, 1001)
    P = 0.5 + bump(T, 2, 0.2) + bump(T, 4, 0.2) + bump(T, 6, 0.2)
    centres = [(2.0, QUASI_GAUSSIAN), (4.0, OSCILLATING), (6.0, QUASI_GAUSSIAN), (8.0, OSCILLATING)]
    s = segment_by_centres(Interferogram(T, P), centres)
    assert [x.kind for x in s] == [OSCILLATING, QUASI_GAUSSIAN]
    assert s[0].window == pytest.approx((3.0, 5.0))
    assert s[1].window == pytest.approx((5.0, 7.0))


def test_count_sign_changes():
    assert count_sign_changes([1, -1, 1, -1]) == 3
    assert count_sign_changes([1, 0.001, -1], floor=0.01) == 1


# correlation ---------------------------------------------------------------

def test_self_correlation():
    T = np.linspace(0, 1, 201)
    f = seg(T, np.sin(9 * T) * bump(T, 0.5, 0.1))
    r = cross_correlate(f, f, 3)
    assert r.tau == pytest.approx(0.0, abs=1e-12)
    assert r.peak == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0.5, 5.0), st.floats(0.0, 0.99))
def test_known_shift(shift, frac):
    dT = 1e-3
    T = np.arange(0, 0.6, dT)
    f = seg(T, bump(T, 0.3, 0.05))
    D = shift + frac * dT
    g = seg(T + D, bump(T, 0.3, 0.05))
    r = cross_correlate(f, g, 1)
    assert r.tau == pytest.approx(D, abs=1e-12)
    r2 = cross_correlate(f, seg(T + 2 * D, bump(T, 0.3, 0.05)), 2)
    assert r2.tau == pytest.approx(D, abs=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_correlation_bounded(seed):
    rng = np.random.default_rng(seed)
    T = np.linspace(0, 1, 50)
    r = cross_correlate(seg(T, rng.normal(size=50)), seg(T + 0.3, rng.normal(size=50)))
    assert -1.0 <= r.peak <= 1.0


def test_subsample_shift_beats_grid():
    dT = 1e-3
    T = np.arange(0, 0.6, dT)
    D = 2.0 + 0.37 * dT
    g = seg(T, bump(T, 0.3 + D - 2.0, 0.05))
    g = seg(T + 2.0, g.values)
    r = cross_correlate(seg(T, bump(T, 0.3, 0.05)), g)
    assert abs(r.tau - D) < 0.1 * dT


def test_degenerate_segment():
    T = np.linspace(0, 1, 10)
    with pytest.raises(DegenerateSegment):
        cross_correlate(seg(T, np.zeros(10)), seg(T, np.ones(10)))
    with pytest.raises(ValueError):
        cross_correlate(seg(T, np.ones(10)), seg(T, np.ones(10)), 0)


def test_correlate_all_harmonic_signal():
    # a perfect periodic train recovers its period
    P = 7.73808e-3
    T = np.arange(0, 40e-3, 2e-6)
    v = sum(bump(T, (n + 0.5) * P, 0.3e-3) for n in range(5))
    segs = segment_resonances(Interferogram(T, 0.5 + v), expected_period=P)
    res, tau, sd = correlate_all(segs, P)
    assert len(res) == len(segs) * (len(segs) - 1) // 2
    assert tau == pytest.approx(P, abs=1e-9)
    assert frequency_from_delay(tau) / TWO_PI == pytest.approx(129.231, abs=0.001)
    with pytest.raises(Underdetermined):
        correlate_all(segs[:1], P)


def test_frequency_from_delay():
    assert frequency_from_delay(10e-3) == pytest.approx(TWO_PI * 100)
    assert frequency_from_delay(7.56888e-3) / TWO_PI == pytest.approx(132.12, abs=0.005)
    with pytest.raises(ValueError):
        frequency_from_delay(0.0)


# fits ----------------------------------------------------------------------

def est(dz, w, u=0.0):
    return [FrequencyEstimate(float(o), "correlation", float(d), u) for d, o in zip(dz, w)]


def test_fit_exact_quadratic():
    dz = np.linspace(1e-6, 5e-6, 5)
    k = (813.0, 2e5, -7e10)
    r = fit_frequencies(est(dz, k[0] + k[1] * dz + k[2] * dz**2))
    assert np.allclose(r.coefficients, k, rtol=1e-10)
    r2 = fit_frequencies(est(dz, k[0] + k[2] * dz**2), "k1_k3")
    assert r2.k["k2"] == 0.0
    assert r2.intercept == pytest.approx(813.0, rel=1e-12)


def test_fit_matches_normal_equations(rng):
    dz = np.linspace(1e-6, 6e-6, 9)
    w = 813 + 1e5 * dz - 5e10 * dz**2 + rng.normal(scale=0.05, size=dz.size)
    for model, cols in (("k1_k2_k3", (0, 1, 2)), ("k1_k3", (0, 2))):
        r = fit_frequencies(est(dz, w), model)
        X = np.stack([dz**c for c in cols], axis=1)
        ref = normal_equations(X, w)
        assert np.allclose(r.coefficients, ref, rtol=1e-8)
        # residuals orthogonal to the model columns
        scaled = X / np.max(np.abs(X), axis=0)
        assert np.max(np.abs(scaled.T @ r.residuals)) < 1e-8 * np.max(np.abs(w))
        assert np.all(np.linalg.eigvalsh(r.covariance) >= -1e-12 * np.max(np.abs(r.covariance)))


def test_weighted_fit():
    dz = np.linspace(1e-6, 5e-6, 5)
    w = 813 - 6e10 * dz**2
    unc = np.array([1, 1, 1, 1, 1e3])
    w_bad = w.copy()
    w_bad[-1] += 50.0
    ests = [FrequencyEstimate(o, "correlation", d, u) for d, o, u in zip(dz, w_bad, unc)]
    weighted = fit_frequencies(ests, "k1_k3")
    uniform = fit_frequencies(ests, "k1_k3", weighted=False)
    assert abs(weighted.intercept - 813) < abs(uniform.intercept - 813)
    with pytest.raises(ValueError):
        fit_frequencies(est(dz, w), weighted=True)


def test_fit_errors():
    with pytest.raises(Underdetermined):
        fit_frequencies(est([1e-6, 2e-6], [800, 801]))
    with pytest.raises(Underdetermined):
        fit_frequencies(est([1e-6, 1e-6, 1e-6], [800, 801, 802]), "k1_k3")
    with pytest.raises(IllConditioned):
        fit_frequencies(est([1.0, 1.0 + 1e-9, 1.0 + 2e-9], [1, 2, 3]))
    with pytest.raises(ValueError):
        fit_frequencies(est([1, 2, 3], [1, 2, 3]), "cubic")
    with pytest.raises(ValueError):
        FrequencyEstimate(-1.0, "correlation", 0.0)


# bounds --------------------------------------------------------------------

def test_bounds_golden():
    m, w = MASS_RB87, TWO_PI * 129.398
    # curvature that reproduces the quoted alpha bound
    k3 = -15 * (4.63e-16) ** 2 / (4 * m**2 * w**3)
    b = anharmonicity_bounds(k3, m, w)
    assert b.alpha_max == pytest.approx(4.63e-16, rel=1e-12)
    assert b.beta_max == pytest.approx(5.63e-12, rel=5e-3)
    assert b.contains(2.76e-16, -4.39e-12)
    assert not b.degenerate


def test_bounds_degenerate_and_positive():
    b = anharmonicity_bounds(0.0, MASS_RB87, 800.0)
    assert b.degenerate and b.alpha_max == 0.0 and b.beta_max == 0.0
    with pytest.raises(PositiveCurvature):
        anharmonicity_bounds(1.0, MASS_RB87, 800.0)


@given(st.floats(1e6, 1e12), st.floats(1.01, 10.0))
def test_bounds_monotone(k, f):
    a = anharmonicity_bounds(-k, MASS_RB87, 800.0)
    b = anharmonicity_bounds(-k * f, MASS_RB87, 800.0)
    assert b.alpha_max > a.alpha_max and b.beta_max > a.beta_max


# crossings -----------------------------------------------------------------

def test_period_from_crossings():
    assert period_from_crossings([10e-3, 20e-3, 30e-3])[0] == pytest.approx(10e-3)
    a = period_from_crossings([1.0, 2.1, 2.9, 4.05])
    b = period_from_crossings(np.array([1.0, 2.1, 2.9, 4.05]) + 0.37)
    assert a[0] == pytest.approx(b[0], rel=1e-14)
    assert period_from_crossings([0.0, 3.0], [1, 4])[0] == pytest.approx(1.0)
    with pytest.raises(Underdetermined):
        period_from_crossings([1.0])
    with pytest.raises(ValueError):
        period_from_crossings([1.0, 2.0], [2, 1])


def test_period_from_analytic_crossings():
    T2 = 10e-3
    times = []
    for n in range(1, 6):
        T = np.linspace(n * T2 - 0.5e-3, n * T2 + 0.5e-3, 101)
        a = scan(MziConfig(table1_pair(0.1), 2, np.pi / 2), T, 3)
        b = scan(MziConfig(table1_pair(0.15), 2, np.pi / 2), T, 3)
        times.append(find_crossing(a, b, (T[0], T[-1])))
    assert period_from_crossings(times)[0] == pytest.approx(T2, rel=1e-6)
