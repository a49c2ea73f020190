"""
Uniform 1D lattice and the detector / complement partition.

The detector region D and its complement (written ``Dbar`` in code) split the
grid points. Surface integrals over the boundary of Dbar reduce in 1D to signed
point evaluations: each boundary entry is the last Dbar point next to a D point,
together with the sign of the outward direction (out of Dbar, into D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MIN_POINTS = 8
# positions must coincide with a grid point up to this fraction of dx
SNAP_TOL = 1e-6


class GridError(ValueError):
    """Invalid grid or region construction."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``x_i = x_min + i*dx`` with Dirichlet edges.

    The quadrature weight is ``dx`` at every point, so the discrete inner
    product is ``<phi|psi> = dx * sum(conj(phi) * psi)``.
    """

    x_min: float
    x_max: float
    n: int

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + np.arange(self.n) * self.dx
        x.setflags(write=False)
        return x

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def quad(self, values) -> float | complex:
        """Uniform-weight quadrature of sampled values."""
        return self.dx * np.sum(values)

    def inner(self, phi: np.ndarray, psi: np.ndarray) -> complex:
        return self.dx * np.vdot(phi, psi)

    def index_of(self, position: float) -> int:
        """Index of the grid point at ``position``; raises if it is off-grid."""
        s = (position - self.x_min) / self.dx
        i = int(round(s))
        if abs(s - i) > SNAP_TOL or not 0 <= i < self.n:
            raise GridError(f"position {position!r} does not lie on a grid point")
        return i


def make_grid(x_min: float, x_max: float, n: int) -> Grid1D:
    """Build a uniform grid, rejecting degenerate input."""
    if not (math.isfinite(x_min) and math.isfinite(x_max)):
        raise GridError("grid bounds must be finite")
    if not x_min < x_max:
        raise GridError(f"need x_min < x_max, got {x_min!r}, {x_max!r}")
    if int(n) != n or n < MIN_POINTS:
        raise GridError(f"need an integer n >= {MIN_POINTS}, got {n!r}")
    return Grid1D(float(x_min), float(x_max), int(n))


@dataclass(frozen=True)
class DetectorSpec:
    """Detector geometry: ``half_line`` is x >= x_d, ``interval`` is [a, b]."""

    kind: str
    x_d: float | None = None
    a: float | None = None
    b: float | None = None

    @classmethod
    def half_line(cls, x_d: float) -> DetectorSpec:
        return cls("half_line", x_d=float(x_d))

    @classmethod
    def interval(cls, a: float, b: float) -> DetectorSpec:
        return cls("interval", a=float(a), b=float(b))


@dataclass(frozen=True, eq=False)
class Region:
    """Partition of a grid into detector D and complement Dbar.

    ``boundary`` holds ``(index, outward_sign)`` pairs ordered left to right.
    """

    grid: Grid1D
    spec: DetectorSpec
    detector_indices: tuple[int, int]  # inclusive first/last D index
    complement_mask: np.ndarray = field(repr=False)
    boundary: tuple[tuple[int, int], ...]

    @property
    def detector_mask(self) -> np.ndarray:
        return 1.0 - self.complement_mask

    @property
    def n_complement(self) -> int:
        return int(self.complement_mask.sum())

    def same_as(self, other: Region) -> bool:
        return (
            self.grid == other.grid
            and self.boundary == other.boundary
            and np.array_equal(self.complement_mask, other.complement_mask)
        )


def make_region(grid: Grid1D, spec: DetectorSpec) -> Region:
    n = grid.n
    if spec.kind == "half_line":
        if spec.x_d is None:
            raise GridError("half_line detector needs x_d")
        lo, hi = grid.index_of(spec.x_d), n - 1
        if lo < 2:
            raise GridError("detector boundary touches the left grid edge")
        boundary = ((lo - 1, +1),)
    elif spec.kind == "interval":
        if spec.a is None or spec.b is None:
            raise GridError("interval detector needs a and b")
        lo, hi = grid.index_of(spec.a), grid.index_of(spec.b)
        if lo >= hi:
            raise GridError("interval detector needs a < b")
        if lo < 2 or hi > n - 3:
            raise GridError("interval detector touches a grid edge")
        boundary = ((lo - 1, +1), (hi + 1, -1))
    else:
        raise GridError(f"unknown detector kind {spec.kind!r}")

    if hi - lo + 1 < 2:
        raise GridError("detector must contain at least 2 grid points")
    mask = np.ones(n)
    mask[lo : hi + 1] = 0.0
    if mask.sum() < 4:
        raise GridError("complement must contain at least 4 grid points")
    mask.setflags(write=False)
    return Region(grid, spec, (lo, hi), mask, boundary)


def characteristic_vector(region: Region) -> np.ndarray:
    """The 0/1 indicator of Dbar sampled on the grid."""
    return region.complement_mask.copy()
