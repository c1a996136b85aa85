import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import lambertw

from mzitrap.constants import G_EARTH, HBAR, MASS_RB87
from mzitrap.dipole import (
    DipoleTrapConfig,
    RB87_DLINES,
    axial_potential,
    characterize,
    classical_period,
    dipole_potential,
    harmonic_amplitude,
    kappa,
    lambert_w0,
    reference_dipole_config,
    perturbative_frequency,
    sag_z0,
    turning_points,
)
from mzitrap.errors import NoMinimum, OutOfDomain, ResonanceSingularity, Unbound

TWO_PI = 2 * np.pi
INV_E = np.exp(-1.0)


# lambert W ---------------------------------------------------------------

@given(st.floats(-INV_E, 1e3))
def test_lambert_identity(x):
    w = lambert_w0(x)
    assert abs(w * np.exp(w) - x) <= 1e-14 * max(1.0, abs(x))


def test_lambert_matches_scipy():
    x = np.concatenate([-INV_E + np.logspace(-12, -1, 30), np.linspace(-0.3, 5, 50), np.logspace(1, 3, 20)])
    ref = lambertw(x, 0).real
    # near -1/e an ulp in x moves W by |x dW/dx| eps = |W / (1 + W)| eps
    cond = np.abs(ref / (1.0 + ref))
    tol = 1e-13 * np.maximum(1.0, np.abs(ref)) + 8 * np.finfo(float).eps * cond
    assert np.all(np.abs(lambert_w0(x) - ref) <= tol)


def test_lambert_special_values():
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(-INV_E) == pytest.approx(-1.0, abs=1e-7)
    assert lambert_w0(np.e) == pytest.approx(1.0, rel=1e-15)


def test_lambert_domain():
    with pytest.raises(OutOfDomain):
        lambert_w0(-0.4)


# polarizability and potential ----------------------------------------------

def test_kappa_sign():
    assert kappa(RB87_DLINES, 1064e-9) < 0
    assert kappa(RB87_DLINES, 532e-9) > 0
    with pytest.raises(ResonanceSingularity):
        kappa(RB87_DLINES, TWO_PI * 299792458.0 / RB87_DLINES.omega_d2)


def test_potential_at_origin():
    c = reference_dipole_config()
    expected = HBAR * c.kappa * 2 * (2 * c.power / (np.pi * c.waist**2)) / 8
    assert dipole_potential(c, 0.0, 0.0, 0.0) == pytest.approx(expected, rel=1e-14)


def test_potential_independent_intensity(rng):
    # [DERIVED] direct Gaussian-beam formula for two crossed beams
    c = reference_dipole_config()
    zR = np.pi * c.waist**2 / c.wavelength
    for _ in range(20):
        x, y, z = rng.normal(scale=50e-6, size=3)
        wx = c.waist * np.sqrt(1 + (x / zR) ** 2)
        wy = c.waist * np.sqrt(1 + (y / zR) ** 2)
        I = (2 * c.power / (np.pi * wx**2) * np.exp(-2 * (y**2 + z**2) / wx**2)
             + 2 * c.power / (np.pi * wy**2) * np.exp(-2 * (x**2 + z**2) / wy**2))
        ref = HBAR * c.kappa * I / 8 + c.mass * G_EARTH * z
        assert dipole_potential(c, x, y, z) == pytest.approx(ref, rel=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        DipoleTrapConfig(power=0.0)
    with pytest.raises(ValueError):
        DipoleTrapConfig(mass=-1.0)


# sag -----------------------------------------------------------------------

def test_sag_golden():
    assert sag_z0(reference_dipole_config()) == pytest.approx(-13.72e-6, abs=0.02e-6)
    assert sag_z0(reference_dipole_config(), 0.7 * G_EARTH) == pytest.approx(-9.42e-6, abs=0.02e-6)
    assert sag_z0(reference_dipole_config(), 0.0) == 0.0


def test_sag_is_potential_minimum():
    c = reference_dipole_config()
    z0 = sag_z0(c)
    V = axial_potential(c)
    h = 1e-9
    assert abs(V(z0 + h) - V(z0 - h)) / (2 * h) < 1e-9 * c.mass * G_EARTH


def test_sag_monotone_until_no_minimum():
    c = reference_dipole_config()
    g = np.linspace(0.05, 1, 60) * G_EARTH
    z = np.array([sag_z0(c, gi) for gi in g])
    assert np.all(np.diff(np.abs(z)) > 0)
    g_hi = G_EARTH
    while True:
        try:
            sag_z0(c, g_hi)
        except NoMinimum:
            break
        g_hi *= 1.5
    assert g_hi > G_EARTH


def test_blue_detuning_has_no_minimum():
    with pytest.raises(NoMinimum):
        sag_z0(DipoleTrapConfig(wavelength=532e-9))


# characterization ----------------------------------------------------------

def test_characterize_golden():
    r = characterize(reference_dipole_config())
    assert r.z0 == pytest.approx(-13.72e-6, abs=0.02e-6)
    assert r.omega_x / TWO_PI == pytest.approx(95.15, abs=0.01)
    assert r.omega_y == r.omega_x
    assert r.omega_z / TWO_PI == pytest.approx(129.398, abs=0.005)
    assert r.alpha == pytest.approx(2.76e-16, rel=0.02)
    assert r.beta == pytest.approx(-4.39e-12, rel=0.02)


def test_characterize_second_state():
    r = characterize(reference_dipole_config(), 0.7 * G_EARTH)
    assert r.z0 == pytest.approx(-9.42e-6, abs=0.02e-6)
    assert r.omega_x / TWO_PI == pytest.approx(96.11, abs=0.01)
    assert r.omega_z / TWO_PI == pytest.approx(133.48, abs=0.01)


@pytest.mark.parametrize("g", [0.0, 0.3, 0.7, 1.0, 1.2])
def test_closed_forms_match_finite_differences(g):
    r = characterize(reference_dipole_config(), g * G_EARTH)
    mm = r.max_relative_mismatch()
    for key in ("omega_x", "omega_y", "omega_z"):
        assert mm[key] < 1e-6
    if g == 0.0:
        assert r.alpha == 0.0
        assert abs(r.numeric["alpha"]) < 1e-4 * abs(characterize(reference_dipole_config()).alpha)
    else:
        assert mm["alpha"] < 1e-4
    assert mm["beta"] < 1e-4


# classical period ----------------------------------------------------------

def harmonic(omega, m=MASS_RB87):
    return lambda z: 0.5 * m * omega**2 * np.asarray(z) ** 2


def test_harmonic_period_energy_independent():
    w = TWO_PI * 130.0
    V = harmonic(w)
    E0 = 0.5 * MASS_RB87 * w**2 * (1e-6) ** 2
    for E in E0 * np.logspace(-3, 3, 13):
        scale = 0.1 * np.sqrt(2 * E / (MASS_RB87 * w**2))
        assert classical_period(V, E, MASS_RB87, scale=scale) == pytest.approx(TWO_PI / w, rel=1e-8)


def test_quartic_period_scaling():
    b = 1e-12
    V = lambda z: b * np.asarray(z) ** 4
    E = np.logspace(-30, -26, 9)
    P = [classical_period(V, e, MASS_RB87, scale=0.1 * (e / b) ** 0.25) for e in E]
    slope = np.polyfit(np.log(E), np.log(P), 1)[0]
    assert slope == pytest.approx(-0.25, abs=1e-8)


def test_unbound():
    V = lambda z: -1e-30 * np.cos(np.asarray(z) / 1e-6)
    with pytest.raises(Unbound):
        classical_period(V, 2e-30, MASS_RB87)
    with pytest.raises(ValueError):
        turning_points(harmonic(800.0), -1.0)


def test_perturbative_limits():
    assert perturbative_frequency(800.0, 0.0, 0.0, 5e-6) == 800.0
    r = characterize(reference_dipole_config())
    r2 = characterize(reference_dipole_config(), 0.7 * G_EARTH)
    assert perturbative_frequency(r.omega_z, r.alpha, r.beta, abs(r.z0 - r2.z0)) < r.omega_z


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_perturbative_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    w = TWO_PI * 130.0
    m = MASS_RB87
    a = rng.uniform(-3e-16, 3e-16)
    b = rng.uniform(-5e-12, 5e-12)
    V = lambda z: 0.5 * m * w**2 * np.asarray(z) ** 2 + a * np.asarray(z) ** 3 + b * np.asarray(z) ** 4
    errs = []
    for Z in (2e-6, 1e-6, 0.5e-6):
        E = 0.5 * m * w**2 * Z**2
        exact = TWO_PI / classical_period(V, E, m, scale=0.1 * Z)
        errs.append(abs(perturbative_frequency(w, a, b, harmonic_amplitude(E, w)) - exact) / exact)
    assert errs[-1] < 1e-4
    # residual is fourth order in the amplitude
    if errs[0] > 1e-12:
        assert errs[0] / errs[1] == pytest.approx(16, rel=0.3)
