"""Wave functions on a grid, initial packets, and the free-Gaussian oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid1D, Region

# packet amplitude allowed at the grid edges, relative to the peak
EDGE_GUARD = 1e-8
# sigma must span at least this many grid spacings
MIN_SIGMA_POINTS = 4


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid1D
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.shape != (self.grid.n,):
            raise ValueError(f"amplitudes have shape {a.shape}, grid has n={self.grid.n}")
        object.__setattr__(self, "amplitudes", a)

    @property
    def norm2(self) -> float:
        return float(self.grid.dx * np.sum(np.abs(self.amplitudes) ** 2))

    def inner(self, other: WaveFunction) -> complex:
        """``<self|other>``."""
        return self.grid.inner(self.amplitudes, other.amplitudes)

    def normalized(self) -> WaveFunction:
        n2 = self.norm2
        if n2 == 0:
            raise ValueError("cannot normalize the zero state")
        return WaveFunction(self.grid, self.amplitudes / np.sqrt(n2))

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> WaveFunction:
        return WaveFunction(self.grid, self.amplitudes.copy())


def gaussian_packet(grid: Grid1D, x0: float, sigma: float, k0: float) -> WaveFunction:
    """Normalized ``exp(-(x-x0)^2/(4 sigma^2)) exp(i k0 x)``.

    The envelope is real and positive at ``x0`` before the plane-wave factor.
    """
    if not grid.x_min < x0 < grid.x_max:
        raise ValueError(f"packet centre {x0!r} lies outside the grid")
    if sigma < MIN_SIGMA_POINTS * grid.dx:
        raise ValueError(f"sigma={sigma!r} is under-resolved (need >= {MIN_SIGMA_POINTS} dx)")
    x = grid.x
    envelope = np.exp(-((x - x0) ** 2) / (4 * sigma**2))
    edge = max(np.exp(-((grid.x_min - x0) ** 2) / (4 * sigma**2)), np.exp(-((grid.x_max - x0) ** 2) / (4 * sigma**2)))
    if edge >= EDGE_GUARD:
        raise ValueError(f"packet overlaps the grid edges (relative edge amplitude {edge:.3g})")
    return WaveFunction(grid, envelope * np.exp(1j * k0 * x)).normalized()


def restrict(psi: WaveFunction, region: Region) -> WaveFunction:
    """Zero the samples inside the detector."""
    if psi.grid != region.grid:
        raise ValueError("wave function and region live on different grids")
    return WaveFunction(psi.grid, psi.amplitudes * region.complement_mask)


def detector_part(psi: WaveFunction, region: Region) -> WaveFunction:
    return WaveFunction(psi.grid, psi.amplitudes * region.detector_mask)


@dataclass(frozen=True)
class FreeGaussian:
    """Closed-form free evolution of the Gaussian packet at time ``t``.

    With complex width ``alpha = sigma^2 + i t/(2m)`` and
    ``xi = x - x0 - k0 t/m``::

        psi = (2 pi sigma^2)^(-1/4) sqrt(sigma^2/alpha)
              exp(i k0 x - i k0^2 t/(2m)) exp(-xi^2/(4 alpha))
        j   = |psi|^2 (k0 + xi t/(4 m |alpha|^2)) / m
    """

    x0: float
    sigma: float
    k0: float
    m: float
    t: float

    @property
    def alpha(self) -> complex:
        return self.sigma**2 + 1j * self.t / (2 * self.m)

    @property
    def width(self) -> float:
        """Position spread ``sigma(t)``."""
        return abs(self.alpha) / self.sigma

    def _xi(self, x):
        return np.asarray(x, dtype=float) - self.x0 - self.k0 * self.t / self.m

    def amplitude(self, x) -> np.ndarray:
        s, a = self.sigma, self.alpha
        pre = (2 * np.pi * s**2) ** -0.25 * np.sqrt(s**2 / a)
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * self.k0 * x - 1j * self.k0**2 * self.t / (2 * self.m))
        return pre * phase * np.exp(-self._xi(x) ** 2 / (4 * a))

    def density(self, x) -> np.ndarray:
        return np.abs(self.amplitude(x)) ** 2

    def current(self, x) -> np.ndarray:
        a = self.alpha
        return self.density(x) * (self.k0 + self._xi(x) * self.t / (4 * self.m * abs(a) ** 2)) / self.m


def free_gaussian_analytic(x0: float, sigma: float, k0: float, m: float, t: float):
    """Return ``(amplitude, current)`` callables of x for the free packet at ``t``."""
    if not m > 0:
        raise ValueError("mass must be positive")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    g = FreeGaussian(x0, sigma, k0, m, t)
    return g.amplitude, g.current
