"""
Probability current, boundary flux, region probabilities and continuity checks.

Two boundary stencils are available:

``central``
    ``sum_b sign_b j(x_b)`` with the central-difference current at the last
    Dbar point. Equals ``<psi|N_dec|psi>`` (shared stencil).
``bond``
    The current on the bond joining the last Dbar point to the first D point,
    ``Im(conj(psi_lo) psi_hi) / (m dx)``. Equals ``<psi|i(pibar H - H pibar)|psi>``,
    i.e. exactly the rate at which the discrete Dbar probability changes under
    the lattice Hamiltonian. The two agree to O(dx).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Region
from .operators import central_difference
from .states import WaveFunction

STENCILS = ("central", "bond")


def _amps(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, WaveFunction) else np.asarray(psi)


def probability_current(psi: WaveFunction, m: float) -> np.ndarray:
    """``j_i = Im(conj(psi_i) (Dc psi)_i) / m`` on every grid point."""
    if not m > 0:
        raise ValueError("mass must be positive")
    a = psi.amplitudes
    return np.imag(np.conj(a) * (central_difference(psi.grid) @ a)) / m


def boundary_flux(psi, region: Region, m: float, stencil: str = "central") -> float:
    """Outward flux of the probability current through the Dbar boundary."""
    if stencil not in STENCILS:
        raise ValueError(f"stencil must be one of {STENCILS}")
    a = _amps(psi)
    dx = region.grid.dx
    total = 0.0
    for b, sign in region.boundary:
        if stencil == "central":
            total += sign * np.imag(np.conj(a[b]) * (a[b + 1] - a[b - 1])) / (2 * dx * m)
        else:
            lo, hi = min(b, b + sign), max(b, b + sign)
            total += sign * np.imag(np.conj(a[lo]) * a[hi]) / (dx * m)
    return float(total)


def region_probability(psi, region: Region) -> float:
    """Probability to be found in Dbar, ``sum_{i in Dbar} dx |psi_i|^2``."""
    a = _amps(psi)
    return float(region.grid.dx * np.sum(region.complement_mask * np.abs(a) ** 2))


def detector_probability(psi, region: Region) -> float:
    a = _amps(psi)
    return float(region.grid.dx * np.sum(region.detector_mask * np.abs(a) ** 2))


def flux_volume_form(psi: WaveFunction, region: Region, m: float) -> float:
    """``-sum_i dx (Dc chi)_i j_i`` with chi the Dbar indicator.

    The indicator is continued by its edge value beyond the grid, so only the
    detector boundary contributes to the gradient.
    """
    chi = np.pad(region.complement_mask, 1, mode="edge")
    grad = (chi[2:] - chi[:-2]) / (2 * region.grid.dx)
    return float(-region.grid.dx * np.sum(grad * probability_current(psi, m)))


@dataclass
class ContinuityReport:
    t_mid: np.ndarray
    residual: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0


def continuity_residual(traj, region: Region, m: float | None = None, stencil: str = "bond", midpoint: str = "average"):
    """``r = dPbar/dt + flux`` on every recorded interval of a unitary run.

    ``midpoint="average"`` averages the fluxes at the two recorded endpoints
    (second order in dt). ``midpoint="step"`` uses the per-step fluxes of the
    averaged states accumulated during propagation; for the bond stencil this
    is the form Crank-Nicolson conserves exactly.
    """
    if traj.region is not None and not traj.region.same_as(region):
        raise ValueError("trajectory was recorded with a different region")
    if traj.grid != region.grid:
        raise ValueError("trajectory and region live on different grids")
    t = traj.times
    if t.size < 2:
        raise ValueError("need at least two recorded times")
    if traj.states is not None and m is not None:
        pbar = np.array([region_probability(s, region) for s in traj.states])
        flux = np.array([boundary_flux(s, region, m, stencil) for s in traj.states])
    else:
        if stencil != "bond":
            raise ValueError("central-stencil residual needs recorded states and a mass")
        pbar, flux = traj.pbar, traj.flux
    rate = np.diff(pbar) / np.diff(t)
    if midpoint == "average":
        f = 0.5 * (flux[1:] + flux[:-1])
    elif midpoint == "step":
        if stencil != "bond" or traj.flux_mid is None:
            raise ValueError("step-midpoint residual needs the bond stencil and recorded midpoint fluxes")
        f = traj.flux_mid
    else:
        raise ValueError(f"unknown midpoint rule {midpoint!r}")
    return ContinuityReport(0.5 * (t[1:] + t[:-1]), rate + f)


def refinement_order(coarse: float, fine: float, factor: float = 2.0) -> float:
    """Observed convergence order from errors at two resolutions."""
    return float(np.log(coarse / fine) / np.log(factor))
