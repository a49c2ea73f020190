"""
Arrival-time density from the boundary flux, cross-checked against the decay
of the survival probability, plus the hazard-rate reconstruction and the
arrival/departure split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .dynamics import EDGE_TOL, CrankNicolson, EdgeContaminationError, PropagatorConfig, Trajectory, edge_amplitude
from .grid import Region
from .observables import boundary_flux, region_probability
from .operators import OperatorMatrix, region_flux_operator
from .states import WaveFunction, restrict

P_FLOOR = 0.05
# initial state must already lie in Dbar to this accuracy
INITIAL_TOL = 1e-10


class ArrivalError(ValueError):
    pass


def _check_initial(traj: Trajectory, region: Region):
    psi0 = traj.initial
    leak = np.sqrt(abs((psi0.amplitudes - restrict(psi0, region).amplitudes) ** 2).sum() * psi0.grid.dx)
    if leak > INITIAL_TOL:
        raise ArrivalError(f"initial state has amplitude {leak:.3g} inside the detector")


def arrival_density_flux(traj: Trajectory, region: Region, m: float, stencil: str = "bond") -> np.ndarray:
    """Boundary flux at every recorded time.

    Without recorded states this reuses the flux scalars of the trajectory,
    which ``evolve`` computes with the bond stencil.
    """
    _check_initial(traj, region)
    if traj.states is not None:
        return np.array([boundary_flux(s, region, m, stencil) for s in traj.states])
    if stencil != "bond":
        raise ArrivalError("central-stencil density needs recorded states")
    if traj.region is None or not traj.region.same_as(region):
        raise ArrivalError("trajectory flux was not recorded for this region")
    return traj.flux.copy()


def arrival_density_norm(traj: Trajectory, region: Region) -> np.ndarray:
    """``-dPbar/dt`` by second-order finite differences on the recorded times."""
    _check_initial(traj, region)
    if traj.times.size < 3:
        raise ArrivalError("need at least 3 recorded times")
    if traj.states is not None:
        pbar = np.array([region_probability(s, region) for s in traj.states])
    else:
        pbar = traj.pbar
    return -np.gradient(pbar, traj.times, edge_order=2)


def split_arrival_departure(density) -> tuple[np.ndarray, np.ndarray]:
    density = np.asarray(density, dtype=float)
    return np.maximum(density, 0.0), np.maximum(-density, 0.0)


@dataclass
class ArrivalRecord:
    times: np.ndarray
    density_flux: np.ndarray
    density_norm: np.ndarray
    pbar: np.ndarray
    cumulative: np.ndarray
    hazard: np.ndarray
    pos_part: np.ndarray
    neg_part: np.ndarray
    valid: np.ndarray
    p_floor: float = P_FLOOR

    @classmethod
    def from_series(cls, times, density, pbar, density_norm=None, p_floor: float = P_FLOOR) -> ArrivalRecord:
        times = np.asarray(times, dtype=float)
        density = np.asarray(density, dtype=float)
        pbar = np.asarray(pbar, dtype=float)
        if density_norm is None:
            density_norm = -np.gradient(pbar, times, edge_order=2)
        pos, neg = split_arrival_departure(density)
        valid = _valid_window(pbar, p_floor)
        hazard = np.full_like(density, np.nan)
        hazard[valid] = density[valid] / pbar[valid]
        return cls(
            times=times,
            density_flux=density,
            density_norm=np.asarray(density_norm, dtype=float),
            pbar=pbar,
            cumulative=cumulative_trapezoid(density, times, initial=0.0),
            hazard=hazard,
            pos_part=pos,
            neg_part=neg,
            valid=valid,
            p_floor=p_floor,
        )

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])

    def peak_time(self) -> float:
        """Time of the largest flux sample, refined by a parabola through its neighbours."""
        i = int(np.argmax(self.density_flux))
        if 0 < i < self.times.size - 1:
            y0, y1, y2 = self.density_flux[i - 1 : i + 2]
            denom = y0 - 2 * y1 + y2
            if denom < 0:
                h = self.times[i + 1] - self.times[i]
                return float(self.times[i] + 0.5 * h * (y0 - y2) / denom)
        return float(self.times[i])


def _valid_window(pbar: np.ndarray, p_floor: float) -> np.ndarray:
    """Leading run of samples with ``pbar >= p_floor``."""
    ok = pbar >= p_floor
    valid = np.zeros_like(ok)
    if ok.size and ok[0]:
        stop = np.argmin(ok) if not ok.all() else ok.size
        valid[:stop] = True
    return valid


def arrival_record(traj: Trajectory, region: Region, m: float, p_floor: float = P_FLOOR) -> ArrivalRecord:
    dens = arrival_density_flux(traj, region, m)
    dens_norm = arrival_density_norm(traj, region)
    pbar = traj.pbar if traj.states is None else np.array([region_probability(s, region) for s in traj.states])
    return ArrivalRecord.from_series(traj.times, dens, pbar, dens_norm, p_floor)


@dataclass
class HazardReport:
    times: np.ndarray
    hazard: np.ndarray
    reconstructed: np.ndarray  # w(t) exp(-int_0^t w), NaN outside the window
    valid: np.ndarray
    max_rel_deviation: float  # max |recon - density| / max|density| on the window


def hazard_reconstruction(record: ArrivalRecord, p_floor: float | None = None) -> HazardReport:
    """Rebuild the density as ``w exp(-int w)`` with ``w = density / Pbar``."""
    floor = record.p_floor if p_floor is None else p_floor
    valid = _valid_window(record.pbar, floor)
    if not valid.any():
        raise ArrivalError(f"survival probability never reaches the floor {floor}")
    k = int(valid.sum())
    t, dens = record.times[:k], record.density_flux[:k]
    w = dens / record.pbar[:k]
    recon = np.full(record.times.shape, np.nan)
    recon[:k] = w * np.exp(-cumulative_trapezoid(w, t, initial=0.0))
    hazard = np.full(record.times.shape, np.nan)
    hazard[:k] = w
    scale = np.max(np.abs(dens))
    if scale == 0:
        dev = float(np.max(np.abs(recon[:k])))
    else:
        dev = float(np.max(np.abs(recon[:k] - dens)) / scale)
    return HazardReport(record.times, hazard, recon, valid, dev)


@dataclass
class RestrictedComparison:
    times: np.ndarray
    pbar_projected: np.ndarray  # Dbar probability of the full (unitary) state
    norm2_restricted: np.ndarray
    difference: np.ndarray  # ||pibar psi_full - psi_restricted||
    rate_projected: float  # dPbar/dt at t = 0
    rate_restricted: float
    rate_flux: float  # -<psi0|N|psi0>
    rate_tol: float

    @property
    def initial_rates_agree(self) -> bool:
        return (
            abs(self.rate_projected - self.rate_restricted) <= self.rate_tol
            and abs(self.rate_projected - self.rate_flux) <= self.rate_tol
        )


def restricted_vs_projected_diagnostic(
    H: OperatorMatrix,
    Hbar: OperatorMatrix,
    psi0: WaveFunction,
    cfg: PropagatorConfig,
    region: Region,
    edge_tol: float = EDGE_TOL,
) -> RestrictedComparison:
    """Run ``exp(-iHt)`` and ``exp(-i Hbar t)`` side by side from the same Dbar state.

    Only the t = 0 slope of the survival probability is expected to match;
    the later discrepancy is reported.
    """
    if np.linalg.norm(psi0.amplitudes * region.detector_mask) > INITIAL_TOL:
        raise ArrivalError("initial state must lie in Dbar")
    if cfg.record_every * 2 > cfg.n_steps:
        raise ArrivalError("need at least 3 recorded times")
    dx = psi0.grid.dx
    full, res = CrankNicolson(H, cfg.dt), CrankNicolson(Hbar, cfg.dt)
    a, b = psi0.amplitudes.copy(), psi0.amplitudes.copy()
    chi = region.complement_mask

    times, pbar, norm2, diff = [], [], [], []

    def record(t):
        times.append(t)
        pbar.append(dx * np.sum(chi * np.abs(a) ** 2))
        norm2.append(dx * np.sum(np.abs(b) ** 2))
        diff.append(np.sqrt(dx) * np.linalg.norm(chi * a - b))

    record(0.0)
    for s in range(1, cfg.n_steps + 1):
        a, b = full.step(a), res.step(b)
        for v in (a, b):
            e = edge_amplitude(v) / np.sqrt(dx * np.sum(np.abs(v) ** 2))
            if e > edge_tol:
                raise EdgeContaminationError(s * cfg.dt, e, edge_tol)
        if s % cfg.record_every == 0:
            record(s * cfg.dt)

    t = np.array(times)
    h = t[1] - t[0]
    slope = lambda y: (-3 * y[0] + 4 * y[1] - y[2]) / (2 * h)  # noqa: E731
    pbar, norm2 = np.array(pbar), np.array(norm2)
    return RestrictedComparison(
        times=t,
        pbar_projected=pbar,
        norm2_restricted=norm2,
        difference=np.array(diff),
        rate_projected=float(slope(pbar)),
        rate_restricted=float(slope(norm2)),
        rate_flux=-float(region_flux_operator(H, region).expectation(psi0).real),
        rate_tol=h**2 + dx,
    )
