"""Split-step propagation of two-component wavefunctions.

Free evolution applies the two state potentials independently. During a
pulse the local ``2x2`` Hamiltonian

    [[V1(x),            hbar W/2 e^{-i phi}],
     [hbar W/2 e^{i phi}, V2(x)            ]]

(rotating frame, rotating-wave approximation) is exponentiated exactly at
every grid point, so only the kinetic/potential splitting error remains.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from ..constants import HBAR, MASS_RB87
from ..errors import NoConvergence
from .grid import Grid, SpinorField, normalized

__all__ = [
    "SplitStepper",
    "split_step_evolve",
    "local_propagator",
    "apply_instant_pulse",
    "apply_local",
    "pulse_matrix",
    "curvature_frequency",
    "energy_expectation",
    "ground_state",
    "PULSE_KINDS",
]

PULSE_KINDS = ("half_pi", "pi")


def _fftn(a, ndim):
    return np.fft.fftn(a, axes=tuple(range(-ndim, 0)))


def _ifftn(a, ndim):
    return np.fft.ifftn(a, axes=tuple(range(-ndim, 0)))


def local_propagator(V1: np.ndarray, V2: np.ndarray, rabi: float, phase: float, dt: float):
    """Pointwise ``exp(-i H dt / hbar)`` of the coupled two-level Hamiltonian.

    Returns the four matrix elements ``(u11, u12, u21, u22)`` as arrays.
    """
    mean = 0.5 * (V1 + V2)
    half = 0.5 * (V1 - V2)
    h = 0.5 * HBAR * rabi
    lam = np.sqrt(half**2 + h**2)
    theta = lam * dt / HBAR
    glob = np.exp(-1j * mean * dt / HBAR)
    c = np.cos(theta)
    # sin(theta)/lam stays finite when lam -> 0
    sinc = np.where(lam > 0, np.sin(theta) / np.where(lam > 0, lam, 1.0), dt / HBAR)
    u11 = glob * (c - 1j * sinc * half)
    u22 = glob * (c + 1j * sinc * half)
    u12 = glob * (-1j * sinc * h * np.exp(-1j * phase))
    u21 = glob * (-1j * sinc * h * np.exp(1j * phase))
    return u11, u12, u21, u22


def apply_local(psi: np.ndarray, u, ndim: int = 1) -> np.ndarray:
    """Apply pointwise 2x2 elements ``u`` to ``psi`` of shape ``(..., 2, *grid)``."""
    u11, u12, u21, u22 = u
    ax = -(ndim + 1)
    a, b = np.take(psi, 0, axis=ax), np.take(psi, 1, axis=ax)
    return np.stack([u11 * a + u12 * b, u21 * a + u22 * b], axis=ax)


def pulse_matrix(kind: str, pulse_phase: float = 0.0):
    """Elements ``(u11, u12, u21, u22)`` of a perfect resonant pulse.

    ``U = cos(a) - i sin(a) [e^{i phi} |2><1| + e^{-i phi} |1><2|]`` with
    ``a = pi/4`` (``'half_pi'``) or ``pi/2`` (``'pi'``).
    """
    if kind == "half_pi":
        c = s = np.sqrt(0.5)
    elif kind == "pi":
        c, s = 0.0, 1.0
    else:
        raise ValueError(f"pulse kind must be one of {PULSE_KINDS}")
    e = np.exp(1j * pulse_phase)
    return (c, -1j * s * np.conj(e), -1j * s * e, c)


class SplitStepper:
    """Strang-split propagator with cached exponentials.

    Parameters
    ----------
    grid : Grid
    V1, V2 : ndarray
        State potentials sampled on ``grid`` (J).
    dt : float
        Time step (s). A complex step ``-i dtau`` gives imaginary-time
        relaxation.
    rabi, phase : float, optional
        Constant Rabi frequency (rad/s) and pulse phase while this stepper is
        used; ``rabi=None`` means free evolution.
    """

    def __init__(self, grid: Grid, V1: np.ndarray, V2: np.ndarray, dt: float,
                 mass: float = MASS_RB87, rabi: Optional[float] = None, phase: float = 0.0):
        self.grid = grid
        self.dt = dt
        self.ndim = grid.ndim
        kin = grid.kinetic_energy(mass)
        self._kin = np.exp(-1j * kin * dt / HBAR)
        self.coupled = rabi is not None and rabi != 0.0
        if self.coupled:
            self._half = local_propagator(V1, V2, rabi, phase, 0.5 * dt)
            self._full = local_propagator(V1, V2, rabi, phase, dt)
        else:
            self._half = np.stack([np.exp(-0.5j * V1 * dt / HBAR), np.exp(-0.5j * V2 * dt / HBAR)])
            self._full = self._half**2

    def _pot(self, psi, which):
        if self.coupled:
            return apply_local(psi, which, self.ndim)
        return psi * which

    def _kinetic(self, psi):
        return _ifftn(_fftn(psi, self.ndim) * self._kin, self.ndim)

    def run(self, psi: np.ndarray, steps: int) -> np.ndarray:
        """Advance a raw ``(..., 2, *grid)`` array by ``steps`` steps."""
        if steps <= 0:
            return psi
        psi = self._pot(psi, self._half)
        for i in range(steps):
            psi = self._kinetic(psi)
            psi = self._pot(psi, self._full if i < steps - 1 else self._half)
        return psi


def split_step_evolve(state: SpinorField, potentials: Tuple[np.ndarray, np.ndarray], dt: float,
                      steps: int, mass: float = MASS_RB87, rabi: Optional[float] = None,
                      phase: float = 0.0) -> SpinorField:
    """Propagate ``state`` for ``steps`` Strang steps of length ``dt``.

    ``potentials`` are the arrays ``(V1, V2)`` on the state's grid. With
    ``rabi`` set, the two components are coupled as during a box pulse.
    """
    V1, V2 = potentials
    stepper = SplitStepper(state.grid, V1, V2, dt, mass, rabi, phase)
    psi = stepper.run(state.psi, int(steps))
    return SpinorField(state.grid, psi, state.time + steps * dt)


def apply_instant_pulse(state: SpinorField, kind: str, pulse_phase: float = 0.0) -> SpinorField:
    """Apply a perfect resonant pi/2 (``'half_pi'``) or pi (``'pi'``) pulse.

    See :func:`pulse_matrix` for the unitary.
    """
    psi = apply_local(state.psi, pulse_matrix(kind, pulse_phase), state.grid.ndim)
    return SpinorField(state.grid, psi, state.time)


def energy_expectation(state: SpinorField, potentials, mass: float = MASS_RB87) -> float:
    """``<H>`` of the uncoupled Hamiltonian for a (normalized) spinor."""
    grid = state.grid
    kin = grid.kinetic_energy(mass)
    dv = grid.cell_volume
    total = 0.0
    for comp, V in zip(state.psi, potentials):
        phik = _fftn(comp, grid.ndim)
        # Parseval: sum |psi|^2 dV = sum |phi_k|^2 dV / N
        total += float(np.sum(kin * np.abs(phik) ** 2).real) * dv / comp.size
        total += float(np.sum(V * np.abs(comp) ** 2)) * dv
    return total


def curvature_frequency(grid: Grid, V: np.ndarray, mass: float = MASS_RB87) -> float:
    """Harmonic frequency estimate at the grid minimum of ``V`` (for step sizes)."""
    idx = np.unravel_index(np.argmin(V), V.shape)
    best = 0.0
    for ax in range(grid.ndim):
        n = grid.counts[ax]
        i = idx[ax]
        if 0 < i < n - 1:
            lo = list(idx); lo[ax] = i - 1
            hi = list(idx); hi[ax] = i + 1
            d2 = (V[tuple(lo)] - 2 * V[idx] + V[tuple(hi)]) / grid.spacings[ax] ** 2
            if d2 > 0:
                best = max(best, np.sqrt(d2 / mass))
    if best == 0.0:
        best = HBAR * np.pi**2 / (mass * min(grid.spacings) ** 2)
    return best


def ground_state(grid: Grid, potential: np.ndarray, mass: float = MASS_RB87, state: int = 1,
                 tol: float = 1e-12, stages: Tuple[float, ...] = (0.2, 0.05, 0.0125, 0.003),
                 max_steps: int = 200_000, initial: Optional[np.ndarray] = None,
                 polish: bool = True) -> SpinorField:
    """Lowest eigenstate of ``-hbar^2/2m lap + V`` by imaginary-time relaxation.

    The imaginary step is reduced through ``stages`` (in units of the inverse
    harmonic frequency at the potential minimum). Within each stage the
    relaxation continues until the energy changes by less than ``tol``
    (relative to the zero-point scale) per step. Strang splitting leaves an
    ``O(dtau^2)`` bias in the fixed point; with ``polish`` it is removed by a
    Lanczos refinement of the same Fourier-grid Hamiltonian started from the
    relaxed state.

    Raises
    ------
    NoConvergence
        If the total step budget runs out or the refinement fails.
    """
    V = np.asarray(potential, dtype=float)
    if V.shape != grid.shape:
        raise ValueError("potential must be sampled on the grid")
    if not np.all(np.isfinite(V)):
        raise ValueError("potential must be finite on the grid")
    vmin = float(V.min())
    Vs = V - vmin
    omega = curvature_frequency(grid, Vs, mass)
    if initial is None:
        idx = np.unravel_index(np.argmin(Vs), Vs.shape)
        centres = [grid.axis(ax)[idx[ax]] for ax in range(grid.ndim)]
        width = np.sqrt(HBAR / (mass * omega))
        mesh = grid.mesh()
        amp = np.exp(-sum((x - c) ** 2 for x, c in zip(mesh, centres)) / (2 * width**2))
    else:
        amp = np.asarray(initial, dtype=complex)
    amp = normalized(grid, amp)
    kin = grid.kinetic_energy(mass)
    dv = grid.cell_volume
    ndim = grid.ndim
    scale = HBAR * omega

    def energy(a):
        phik = _fftn(a, ndim)
        return (float(np.sum(kin * np.abs(phik) ** 2)) / a.size + float(np.sum(Vs * np.abs(a) ** 2))) * dv

    used = 0
    E_prev = energy(amp)
    chunk = 50
    for stage in stages:
        dtau = stage / omega
        half = np.exp(-0.5 * Vs * dtau / HBAR)
        kin_f = np.exp(-kin * dtau / HBAR)
        converged = False
        while used < max_steps:
            for _ in range(chunk):
                amp = half * _ifftn(_fftn(half * amp, ndim) * kin_f, ndim)
                amp = normalized(grid, amp)
            used += chunk
            E = energy(amp)
            if abs(E - E_prev) / chunk <= tol * max(abs(E), scale):
                E_prev = E
                converged = True
                break
            E_prev = E
        if not converged:
            raise NoConvergence(f"imaginary-time relaxation did not converge in {max_steps} steps")
    if polish:
        amp = _lanczos_polish(grid, Vs, kin, amp, tol)
        E_prev = energy(amp)
    # fix the global phase so the dominant lobe is real and positive
    peak = amp.flat[np.argmax(np.abs(amp))]
    amp = amp * (abs(peak) / peak)
    if np.max(np.abs(amp.imag)) < 1e-10 * np.max(np.abs(amp)):
        amp = amp.real.astype(complex)
    amp = normalized(grid, amp)
    field = SpinorField.from_component(grid, amp, state)
    field.metadata["energy"] = E_prev + vmin
    field.metadata["steps"] = used
    return field


def _lanczos_polish(grid: Grid, Vs: np.ndarray, kin: np.ndarray, amp: np.ndarray,
                    tol: float) -> np.ndarray:
    from scipy.sparse.linalg import LinearOperator, ArpackNoConvergence, eigsh

    ndim, shape, n = grid.ndim, grid.shape, amp.size

    def matvec(v):
        a = np.asarray(v).reshape(shape)
        return (_ifftn(_fftn(a, ndim) * kin, ndim) + Vs * a).ravel()

    op = LinearOperator((n, n), matvec=matvec, dtype=complex)
    try:
        _, vecs = eigsh(op, k=1, which="SA", v0=amp.ravel(), tol=tol)
    except ArpackNoConvergence as exc:
        raise NoConvergence("Lanczos refinement of the ground state failed") from exc
    return normalized(grid, vecs[:, 0].reshape(shape))
