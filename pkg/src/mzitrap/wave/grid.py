"""Uniform periodic grids and two-component spinor fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ..constants import HBAR

__all__ = ["Grid", "SpinorField", "population", "norm"]


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Cartesian grid with power-of-two point counts per axis.

    Points sit at ``center + (i - n/2) * dx`` for ``i = 0..n-1`` with
    ``dx = extent / n``; the box is periodic, as required by the FFT.
    """

    counts: Tuple[int, ...]
    extents: Tuple[float, ...]
    centers: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        counts = tuple(int(n) for n in np.atleast_1d(self.counts))
        extents = tuple(float(e) for e in np.atleast_1d(self.extents))
        centers = (tuple(0.0 for _ in counts) if self.centers is None
                   else tuple(float(c) for c in np.atleast_1d(self.centers)))
        if len(counts) not in (1, 3):
            raise ValueError("grids are 1D or 3D")
        if not (len(counts) == len(extents) == len(centers)):
            raise ValueError("counts, extents and centers must have equal length")
        for n in counts:
            if not _is_power_of_two(n):
                raise ValueError(f"point count {n} is not a power of two")
        if any(e <= 0 for e in extents):
            raise ValueError("extents must be positive")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "centers", centers)

    @classmethod
    def line(cls, n: int, extent: float, center: float = 0.0) -> "Grid":
        return cls((n,), (extent,), (center,))

    @classmethod
    def around(cls, z_lo: float, z_hi: float, n: int) -> "Grid":
        """1D grid spanning ``[z_lo, z_hi]``."""
        return cls.line(n, z_hi - z_lo, 0.5 * (z_lo + z_hi))

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.counts

    @property
    def spacings(self) -> Tuple[float, ...]:
        return tuple(e / n for e, n in zip(self.extents, self.counts))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    def axis(self, i: int = 0) -> np.ndarray:
        n, dx, c = self.counts[i], self.spacings[i], self.centers[i]
        return c + (np.arange(n) - n // 2) * dx

    def wavenumbers(self, i: int = 0) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.counts[i], self.spacings[i])

    def mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.axis(i) for i in range(self.ndim)), indexing="ij"))

    def kinetic_energy(self, mass: float) -> np.ndarray:
        """``hbar^2 |k|^2 / 2m`` on the FFT frequency layout."""
        ks = np.meshgrid(*(self.wavenumbers(i) for i in range(self.ndim)), indexing="ij")
        return HBAR**2 * sum(k**2 for k in ks) / (2 * mass)

    def evaluate(self, potential) -> np.ndarray:
        """Sample a callable ``V(*coords)`` on the grid."""
        return np.asarray(potential(*self.mesh()), dtype=float)

    def describe(self) -> dict:
        return {"counts": list(self.counts), "extents": list(self.extents),
                "centers": list(self.centers)}


@dataclass(frozen=True)
class SpinorField:
    """Amplitudes of ``|1>`` and ``|2>`` on a grid, stacked as ``psi[0], psi[1]``."""

    grid: Grid
    psi: np.ndarray
    time: float = 0.0
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != (2,) + self.grid.shape:
            raise ValueError(f"psi must have shape {(2,) + self.grid.shape}, got {psi.shape}")
        object.__setattr__(self, "psi", psi)

    @classmethod
    def from_component(cls, grid: Grid, amplitude: np.ndarray, state: int,
                       time: float = 0.0) -> "SpinorField":
        psi = np.zeros((2,) + grid.shape, dtype=complex)
        psi[state - 1] = amplitude
        return cls(grid, psi, time)

    def component(self, state: int) -> np.ndarray:
        return self.psi[state - 1]

    def only(self, state: int) -> "SpinorField":
        """Copy with the other component zeroed."""
        psi = np.zeros_like(self.psi)
        psi[state - 1] = self.psi[state - 1]
        return SpinorField(self.grid, psi, self.time)

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def mean_position(self, axis: int = 0) -> float:
        rho = self.density().sum(axis=0)
        coords = self.grid.mesh()[axis]
        return float((rho * coords).sum() / rho.sum())


def norm(state: SpinorField) -> float:
    return float(np.sum(np.abs(state.psi) ** 2) * state.grid.cell_volume)


def population(state: SpinorField) -> Tuple[float, float]:
    """Populations ``(P1, P2)`` of the two internal states."""
    dv = state.grid.cell_volume
    p1 = float(np.sum(np.abs(state.psi[0]) ** 2) * dv)
    p2 = float(np.sum(np.abs(state.psi[1]) ** 2) * dv)
    return p1, p2


def normalized(grid: Grid, amplitude: np.ndarray) -> np.ndarray:
    amp = np.asarray(amplitude, dtype=complex)
    return amp / np.sqrt(np.sum(np.abs(amp) ** 2) * grid.cell_volume)


def gaussian_amplitude(grid: Grid, centers: Sequence[float], widths: Sequence[float]) -> np.ndarray:
    """Normalized real Gaussian ``exp(-sum (x - c)^2 / (2 s^2))``."""
    mesh = grid.mesh()
    arg = sum((x - c) ** 2 / (2 * s**2) for x, c, s in zip(mesh, centers, widths))
    return normalized(grid, np.exp(-arg))
