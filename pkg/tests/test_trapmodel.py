import numpy as np
import pytest
from hypothesis import given, strategies as st

from mzitrap.constants import CONSTANTS, G_EARTH, HBAR, MASS_RB87
from mzitrap.trapmodel import (
    HarmonicTrap1D,
    PulseConfig,
    Trap3D,
    TrapPair,
    detuning_delta,
    table1_pair,
    trap_minimum,
    trap_period,
)

TWO_PI = 2 * np.pi


def test_constants_positive_and_pinned():
    assert CONSTANTS.g_earth == 9.81
    assert CONSTANTS.mass_rb87 == 1.44316060e-25
    assert HBAR > 0 and CONSTANTS.speed_of_light > 0
    with pytest.raises(ValueError):
        type(CONSTANTS)(hbar=-1.0)


@pytest.mark.parametrize("omega, expected", [
    (TWO_PI * 100, -2.4849e-6),
    (TWO_PI * 100 / np.sqrt(2), -4.9698e-6),
])
def test_trap_minimum_table1(omega, expected):
    # oracle: 0.1 g / w^2 computed directly
    trap = HarmonicTrap1D(omega, -0.1 * MASS_RB87 * 9.81)
    assert trap_minimum(trap) == pytest.approx(-0.1 * 9.81 / omega**2, rel=1e-15)
    assert trap_minimum(trap) == pytest.approx(expected, abs=5e-11)


def test_trap_minimum_no_force():
    assert trap_minimum(HarmonicTrap1D(TWO_PI * 50)) == 0.0


@pytest.mark.parametrize("omega, period", [
    (TWO_PI * 100, 10e-3), (TWO_PI * 100 / np.sqrt(2), 14.142e-3), (TWO_PI, 1.0)])
def test_trap_period(omega, period):
    assert trap_period(HarmonicTrap1D(omega)) == pytest.approx(period, rel=5e-5)


def test_invalid_traps():
    with pytest.raises(ValueError):
        HarmonicTrap1D(0.0)
    with pytest.raises(ValueError):
        HarmonicTrap1D(1.0, mass=0.0)
    with pytest.raises(ValueError):
        Trap3D((1.0, 2.0))
    with pytest.raises(ValueError):
        TrapPair(Trap3D((1, 1, 1), 0.0, 1.0), Trap3D((1, 1, 1), 0.0, 2.0))


@given(st.floats(1.0, 1e4), st.floats(-1e-24, 1e-24), st.floats(0.5, 3.0))
def test_trap_minimum_scaling(omega, force, lam):
    # linear in F, scales as omega^-2
    base = trap_minimum(HarmonicTrap1D(omega, force))
    assert trap_minimum(HarmonicTrap1D(omega, lam * force)) == pytest.approx(lam * base, rel=1e-12, abs=1e-300)
    assert trap_minimum(HarmonicTrap1D(lam * omega, force)) == pytest.approx(base / lam**2, rel=1e-12, abs=1e-300)


def test_detuning_golden():
    omega_rabi = TWO_PI * 25e3
    assert detuning_delta(table1_pair(0.1)) / omega_rabi == pytest.approx(0.042, abs=0.002)
    assert detuning_delta(table1_pair(1.0)) / omega_rabi == pytest.approx(4.25, abs=0.05)


def test_detuning_identical_traps():
    t = Trap3D((1e3, 1e3, 1e3), -1e-25)
    assert detuning_delta(TrapPair(t, t)) == 0.0


@given(st.floats(0.1, 5.0))
def test_detuning_quadratic_in_force(lam):
    pair = table1_pair(0.1)
    scaled = pair.with_forces(lam * pair.trap1.force_z, lam * pair.trap2.force_z)
    assert detuning_delta(scaled) == pytest.approx(lam**2 * detuning_delta(pair), rel=1e-12)


def test_table1_pair_values():
    pair = table1_pair(0.1)
    assert pair.trap2.omegas == pytest.approx((TWO_PI * 177.77, TWO_PI * 277.77, TWO_PI * 100))
    assert pair.trap1.omegas == pytest.approx(tuple(w / np.sqrt(2) for w in pair.trap2.omegas))
    assert pair.trap1.force_z == pytest.approx(-0.1 * MASS_RB87 * G_EARTH)
    flat = table1_pair(0.1, transversal=False)
    assert flat.trap1.omegas[:2] == flat.trap2.omegas[:2]
    assert pair.separation == pytest.approx(4.9698e-6 - 2.4849e-6, abs=1e-10)


def test_pulse_config():
    p = PulseConfig(TWO_PI * 25e3)
    assert p.tau_half_pi == pytest.approx(10e-6)
    assert p.tau_pi == pytest.approx(2 * p.tau_half_pi)
    assert p.phase(1.0, 2.0) == 0.0
    q = PulseConfig(1.0, phase_schedule=lambda t, T: t / T)
    assert q.phase(1.0, 4.0) == 0.25
    with pytest.raises(ValueError):
        PulseConfig(0.0)


def test_pure_bit_identical():
    a = detuning_delta(table1_pair(0.37))
    b = detuning_delta(table1_pair(0.37))
    assert a == b
