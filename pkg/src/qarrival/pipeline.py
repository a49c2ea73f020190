"""End-to-end simulation run: unitary evolution, arrival record, restricted diagnostic."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .arrival import ArrivalRecord, HazardReport, RestrictedComparison, arrival_record, hazard_reconstruction
from .arrival import restricted_vs_projected_diagnostic
from .config import Setup, dumps
from .dynamics import Trajectory, evolve
from .observables import ContinuityReport, continuity_residual
from .operators import assemble_full, assemble_restricted_direct
from .states import restrict

SUMMARY_COLUMNS = (
    "peak_arrival_time",
    "total_arrival_probability",
    "final_pbar",
    "closure_residual",
    "max_continuity_residual",
    "max_route_difference",
    "hazard_max_rel_deviation",
    "max_norm_drift",
    "restricted_final_norm2",
    "max_restricted_projected_difference",
    "initial_rates_agree",
)

# per-run checks written to verify.txt: (summary column, tolerance)
RUN_CHECKS = (
    ("max_norm_drift", 1e-10),
    ("max_continuity_residual", 1e-4),
    ("closure_residual", 1e-4),
    ("max_route_difference", 1e-3),
    ("hazard_max_rel_deviation", 1e-3),
)


@dataclass
class SimulationResult:
    setup: Setup
    trajectory: Trajectory
    arrival: ArrivalRecord
    hazard: HazardReport
    continuity: ContinuityReport
    restricted: RestrictedComparison
    summary: dict = field(default_factory=dict)

    def run_checks(self) -> list[tuple[str, float, float, bool]]:
        return [(k, self.summary[k], tol, bool(self.summary[k] <= tol)) for k, tol in RUN_CHECKS]


def run_simulation(setup: Setup, record_states: bool = False) -> SimulationResult:
    m, region = setup.mass, setup.region
    H = assemble_full(setup.grid, setup.potential, m)
    traj = evolve(H, setup.psi0, setup.propagator, region=region, keep_states=record_states)
    rec = arrival_record(traj, region, m)
    haz = hazard_reconstruction(rec)
    cont = continuity_residual(traj, region)
    Hbar = assemble_restricted_direct(H, region)
    diag = restricted_vs_projected_diagnostic(H, Hbar, restrict(setup.psi0, region), setup.propagator, region)

    summary = {
        "peak_arrival_time": rec.peak_time(),
        "total_arrival_probability": rec.total,
        "final_pbar": float(traj.pbar[-1]),
        "closure_residual": abs(rec.total - (1.0 - traj.pbar[-1])),
        "max_continuity_residual": cont.max_abs,
        "max_route_difference": float(np.max(np.abs(rec.density_flux - rec.density_norm))),
        "hazard_max_rel_deviation": haz.max_rel_deviation,
        "max_norm_drift": float(np.max(np.abs(traj.norm2 - traj.norm2[0]))),
        "restricted_final_norm2": float(diag.norm2_restricted[-1]),
        "max_restricted_projected_difference": float(np.max(diag.difference)),
        "initial_rates_agree": diag.initial_rates_agree,
    }
    return SimulationResult(setup, traj, rec, haz, cont, diag, summary)


def write_outputs(result: SimulationResult, outdir) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(dumps(result.setup.config))
    io.write_trajectory(out / "trajectory.csv", result.trajectory)
    io.write_arrival(out / "arrival.csv", result.arrival)
    io.write_csv(out / "summary.csv", SUMMARY_COLUMNS, [[result.summary[k] for k in SUMMARY_COLUMNS]])
    lines = [
        f"{'PASS' if ok else 'FAIL'} {name} value={io.fmt(value)} tol={io.fmt(tol)}"
        for name, value, tol, ok in result.run_checks()
    ]
    (out / "verify.txt").write_text("\n".join(lines) + "\n")
    if result.trajectory.states is not None:
        sdir = out / "states"
        sdir.mkdir(exist_ok=True)
        width = len(str(len(result.trajectory.states)))
        for i, psi in enumerate(result.trajectory.states):
            io.write_state(sdir / f"psi_{i:0{width}d}.csv", psi)
    return out
