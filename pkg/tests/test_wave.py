import numpy as np
import pytest
from scipy.linalg import expm

from mzitrap.constants import HBAR, MASS_RB87
from mzitrap.dipole import axial_potential, reference_dipole_config, sag_z0
from mzitrap.errors import GridViolation
from mzitrap.mzi import MziConfig, signal_1d
from mzitrap.trapmodel import HarmonicTrap1D, PulseConfig, table1_pair
from mzitrap.wave import (
    Grid,
    MziWaveConfig,
    SpectralPropagator,
    SpinorField,
    apply_instant_pulse,
    energy_expectation,
    gaussian_amplitude,
    ground_state,
    harmonic_potential,
    local_propagator,
    norm,
    population,
    run_mzi,
    scan_instant_spectral,
    scan_wave,
    split_step_evolve,
)
from mzitrap.wave.checkpoint import MAGIC, export_marginals, load_checkpoint, save_checkpoint
from oracles import dense_ground_energy

M = MASS_RB87
W = 2 * np.pi * 100.0
S0 = np.sqrt(HBAR / (M * W))


def line(n=256, extent=40e-6, center=0.0):
    return Grid.line(n, extent, center)


def harmonic_on(grid, w=W, F=0.0):
    return harmonic_potential(HarmonicTrap1D(w, F, M))


# grid ----------------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(ValueError):
        Grid.line(100, 1e-5)
    with pytest.raises(ValueError):
        Grid((8, 8), (1.0, 1.0))
    with pytest.raises(ValueError):
        Grid.line(64, -1.0)


def test_grid_layout():
    g = Grid.around(-3e-6, 5e-6, 64)
    x = g.axis()
    assert x.size == 64
    assert g.spacings[0] == pytest.approx(8e-6 / 64)
    assert x[32] == pytest.approx(1e-6)
    k = g.wavenumbers()
    assert np.max(np.abs(k)) == pytest.approx(np.pi / g.spacings[0])


# ground state --------------------------------------------------------------

def test_harmonic_ground_state():
    g = line()
    gs = ground_state(g, g.evaluate(harmonic_on(g)), M)
    assert gs.metadata["energy"] == pytest.approx(0.5 * HBAR * W, rel=1e-10)
    ref = gaussian_amplitude(g, [0.0], [S0])
    assert np.max(np.abs(gs.component(1) - ref)) * np.sqrt(S0) < 1e-10
    assert norm(gs) == pytest.approx(1.0, rel=1e-13)


def test_shifted_ground_state_centre():
    F = 0.1 * 9.81 * M
    g = line(256, 40e-6, F / (M * W**2))
    gs = ground_state(g, g.evaluate(harmonic_on(g, F=F)), M, state=2)
    assert population(gs) == pytest.approx((0.0, 1.0), abs=1e-15)
    assert gs.mean_position() == pytest.approx(F / (M * W**2), abs=1e-6 * S0)


def test_dipole_ground_energy_matches_dense_oracle():
    c = reference_dipole_config()
    z0 = sag_z0(c)
    g = Grid.line(128, 20e-6, z0)
    V = g.evaluate(axial_potential(c))
    gs = ground_state(g, V, M)
    # [DERIVED] finite-difference Hamiltonian on a much finer grid
    z = np.linspace(z0 - 10e-6, z0 + 10e-6, 3001)
    ref = dense_ground_energy(axial_potential(c)(z), z[1] - z[0], M)
    assert gs.metadata["energy"] == pytest.approx(ref, abs=1e-6 * HBAR * 813.0)


def test_spectral_ground_state_agrees():
    g = line(128)
    V = g.evaluate(harmonic_on(g))
    sp = SpectralPropagator.build(g, V, M)
    gs = ground_state(g, V, M)
    assert sp.ground_energy == pytest.approx(gs.metadata["energy"], rel=1e-11)
    assert np.max(np.abs(sp.ground_amplitude() - gs.component(1))) * np.sqrt(S0) < 1e-10


# split step ----------------------------------------------------------------

def test_split_step_conserves_norm(rng):
    g = line()
    amp = gaussian_amplitude(g, [2e-6], [0.8 * S0]) * np.exp(1j * rng.normal() * g.axis() / S0)
    st = SpinorField.from_component(g, amp, 1)
    V = g.evaluate(harmonic_on(g))
    out = split_step_evolve(st, (V, V), 1e-5, 300, M)
    assert norm(out) == pytest.approx(1.0, abs=1e-12)
    assert out.time == pytest.approx(3e-3)


def test_free_spreading():
    # [DERIVED] free Gaussian width sigma(t) = s sqrt(1 + (hbar t / (m s^2))^2)
    g = line(512, 200e-6)
    s = 2e-6
    st = SpinorField.from_component(g, gaussian_amplitude(g, [0.0], [s]), 1)
    zero = np.zeros(g.shape)
    t = 5e-3
    out = split_step_evolve(st, (zero, zero), t / 10, 10, M)
    rho = np.abs(out.component(1)) ** 2
    width = np.sqrt(np.sum(rho * g.axis() ** 2) * g.cell_volume)
    assert width == pytest.approx(s / np.sqrt(2) * np.sqrt(1 + (HBAR * t / (M * s**2)) ** 2), rel=1e-9)


def test_displaced_oscillation_matches_packet_model():
    g = line()
    st = SpinorField.from_component(g, gaussian_amplitude(g, [3e-6], [S0]), 1)
    V = g.evaluate(harmonic_on(g))
    t = 1.7e-3
    out = split_step_evolve(st, (V, V), t / 2000, 2000, M)
    assert out.mean_position() == pytest.approx(3e-6 * np.cos(W * t), abs=1e-6 * S0)
    assert energy_expectation(out, (V, V), M) == pytest.approx(energy_expectation(st, (V, V), M), rel=1e-9)


def _order_ratios():
    g = line()
    V = g.evaluate(harmonic_on(g))
    psi = np.zeros((2,) + g.shape, complex)
    psi[0] = gaussian_amplitude(g, [3e-6], [1.3 * S0])
    st = SpinorField(g, psi)
    t = 2.7e-3
    ref = split_step_evolve(st, (V, V), t / 20000, 20000, M).psi
    errs = []
    for n in (25, 50, 100, 200):
        d = split_step_evolve(st, (V, V), t / n, n, M).psi - ref
        errs.append(np.sqrt(np.sum(np.abs(d) ** 2) * g.cell_volume))
    return np.array(errs[:-1]) / np.array(errs[1:])


def test_split_step_second_order():
    for r in _order_ratios():
        assert r == pytest.approx(4.0, rel=0.1)


# pulses --------------------------------------------------------------------

def test_instant_pulses_populations():
    g = line(64)
    st = SpinorField.from_component(g, gaussian_amplitude(g, [0.0], [S0]), 1)
    half = apply_instant_pulse(st, "half_pi")
    assert population(half) == pytest.approx((0.5, 0.5), abs=1e-14)
    full = apply_instant_pulse(st, "pi", 0.3)
    assert population(full) == pytest.approx((0.0, 1.0), abs=1e-14)
    back = apply_instant_pulse(apply_instant_pulse(st, "half_pi", 0.4), "half_pi", 0.4 + np.pi)
    assert population(back) == pytest.approx((1.0, 0.0), abs=1e-14)
    with pytest.raises(ValueError):
        apply_instant_pulse(st, "quarter")


def test_local_propagator_matches_expm(rng):
    for _ in range(10):
        V1, V2 = rng.normal(scale=1e-30, size=2)
        rabi, phase, dt = rng.uniform(1e4, 1e5), rng.uniform(-np.pi, np.pi), rng.uniform(1e-6, 1e-4)
        u = [complex(np.asarray(x)) for x in local_propagator(np.array(V1), np.array(V2), rabi, phase, dt)]
        h = 0.5 * HBAR * rabi
        H = np.array([[V1, h * np.exp(-1j * phase)], [h * np.exp(1j * phase), V2]])
        U = expm(-1j * H * dt / HBAR)
        assert np.allclose(np.array(u).reshape(2, 2), U, atol=1e-12)


def test_local_propagator_zero_splitting():
    u = local_propagator(np.zeros(3), np.zeros(3), 0.0, 0.0, 1e-5)
    assert np.allclose(u[0], 1.0) and np.allclose(u[1], 0.0)


def test_rabi_flop_on_resonance():
    g = line(64)
    st = SpinorField.from_component(g, gaussian_amplitude(g, [0.0], [S0]), 1)
    zero = np.zeros(g.shape)
    Om = 2 * np.pi * 25e3
    out = split_step_evolve(st, (zero, zero), (np.pi / Om) / 50, 50, M, rabi=Om)
    assert population(out)[1] == pytest.approx(1.0, abs=1e-10)


# interferometer ------------------------------------------------------------

def table1_wave(T=1e-3, n=128, **kw):
    p = table1_pair(0.1)
    t1, t2 = p.trap1.axis("z"), p.trap2.axis("z")
    g = Grid.line(n, 32e-6, -3e-6)
    return p, MziWaveConfig(g, harmonic_potential(t1), harmonic_potential(t2), T, **kw)


def test_grid_mzi_close_to_analytic():
    p, cfg = table1_wave(dt_free=np.sqrt(2) * 1e-2 / 3200)
    for T in (3e-3, 10e-3, 14.1e-3):
        assert run_mzi(cfg.with_T(T)).P2 == pytest.approx(signal_1d(T, MziConfig(p, 2, 0.0)), abs=1e-5)


def test_spectral_matches_analytic():
    p, cfg = table1_wave()
    T = np.linspace(0.5e-3, 30e-3, 300)
    ig = scan_instant_spectral(cfg.grid, cfg.V1, cfg.V2, T, 2, delta_phi=np.pi / 2)
    assert np.max(np.abs(ig.P2 - signal_1d(T, MziConfig(p, 2, np.pi / 2)))) < 1e-10


def test_spectral_with_transversal_matches_3d():
    from mzitrap.mzi import signal_3d
    p, cfg = table1_wave()
    tr = [(p.trap1.omegas[i], p.trap2.omegas[i]) for i in (0, 1)]
    T = np.linspace(0.5e-3, 30e-3, 100)
    ig = scan_instant_spectral(cfg.grid, cfg.V1, cfg.V2, T, 2, transversal=tr, delta_phi=0.4)
    assert np.max(np.abs(ig.P2 - signal_3d(T, MziConfig(p, 2, 0.4)))) < 1e-10


def test_transversal_factorization_in_run_mzi():
    from mzitrap.mzi import signal_3d
    p, cfg = table1_wave(dt_free=np.sqrt(2) * 1e-2 / 3200)
    tr = [(p.trap1.omegas[i], p.trap2.omegas[i]) for i in (0, 1)]
    cfg3 = MziWaveConfig(cfg.grid, cfg.V1, cfg.V2, 7e-3, transversal=tr, dt_free=cfg.dt_free)
    assert run_mzi(cfg3).P2 == pytest.approx(signal_3d(7e-3, MziConfig(p, 2, 0.0)), abs=1e-5)


def test_scan_wave_threads_match_serial():
    _, cfg = table1_wave(n=64)
    T = [2e-3, 5e-3, 9e-3]
    a = scan_wave(cfg, T, workers=1)
    b = scan_wave(cfg, T, workers=3)
    assert np.array_equal(a.P2, b.P2)


def test_rabi_box_weak_force_close_to_analytic():
    p, cfg = table1_wave(pulse_mode="rabi_box", pulse=PulseConfig(2 * np.pi * 25e3))
    pc = cfg.pulse
    T = 10e-3
    shift = 0.5 * pc.tau_half_pi + 0.5 * pc.tau_pi
    assert run_mzi(cfg.with_T(T)).P2 == pytest.approx(signal_1d(T + shift, MziConfig(p, 2, 0.0)), abs=0.02)


def test_grid_violation():
    p, cfg = table1_wave(n=64)
    small = MziWaveConfig(Grid.line(64, 4e-6, -1.5e-6), cfg.V1, cfg.V2, 3e-3)
    with pytest.raises(GridViolation):
        run_mzi(small)


def test_config_validation():
    _, cfg = table1_wave()
    with pytest.raises(ValueError):
        MziWaveConfig(cfg.grid, cfg.V1, cfg.V2, 1e-3, initial_state=3)
    with pytest.raises(ValueError):
        MziWaveConfig(cfg.grid, cfg.V1, cfg.V2, 1e-3, pulse_mode="rabi_box")
    with pytest.raises(ValueError):
        MziWaveConfig(cfg.grid, cfg.V1, cfg.V2, -1e-3)


# checkpoints ---------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path, rng):
    g = Grid((8, 4, 16), (1e-5, 2e-5, 3e-5), (0.0, 1e-6, -2e-6))
    psi = rng.normal(size=(2,) + g.shape) + 1j * rng.normal(size=(2,) + g.shape)
    st = SpinorField(g, psi, 1.25e-3)
    st.metadata["energy"] = 1.5e-31
    f = tmp_path / "state.bin"
    save_checkpoint(f, st)
    back = load_checkpoint(f)
    assert back.grid == g
    assert np.array_equal(back.psi, st.psi)
    assert back.time == st.time
    assert back.metadata["energy"] == 1.5e-31


def test_checkpoint_rejects_bad_files(tmp_path):
    f = tmp_path / "bad.bin"
    f.write_bytes(b"NOTASPNR" + b"\0" * 16)
    with pytest.raises(ValueError, match="magic"):
        load_checkpoint(f)
    g = line(8)
    save_checkpoint(f, SpinorField(g, np.zeros((2, 8), complex)))
    f.write_bytes(f.read_bytes()[:-16])
    with pytest.raises(ValueError, match="bytes"):
        load_checkpoint(f)
    assert MAGIC == b"MZISPNR1"


def test_marginals_normalized(tmp_path):
    g = Grid((16, 16, 16), (2e-5,) * 3)
    amp = gaussian_amplitude(g, [0, 0, 0], [3e-6] * 3)
    st = SpinorField.from_component(g, amp, 2)
    f = tmp_path / "m.csv"
    export_marginals(f, st)
    data = np.genfromtxt(f, delimiter=",", names=True, dtype=None, encoding=None)
    for ax in "xyz":
        rows = data[data["axis"] == ax]
        assert np.sum(rows["density2_per_m"]) * g.spacings[0] == pytest.approx(1.0, rel=1e-12)
        assert np.all(rows["density1_per_m"] == 0)
