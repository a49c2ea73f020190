"""CSV writers: comma separated, header row, LF endings, 17 significant digits."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .states import WaveFunction

TRAJECTORY_COLUMNS = ("t", "norm2", "Pbar", "flux", "edge_amp")
ARRIVAL_COLUMNS = ("t", "density_flux", "density_norm", "cumulative", "hazard", "pos_part", "neg_part", "valid_window")
STATE_COLUMNS = ("x", "re_psi", "im_psi")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, columns, rows):
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(path) -> dict[str, np.ndarray]:
    """Read one of our CSVs back into float columns."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def write_trajectory(path, traj):
    write_csv(path, TRAJECTORY_COLUMNS, zip(traj.times, traj.norm2, traj.pbar, traj.flux, traj.edge_amp))


def write_arrival(path, rec, hazard=None):
    h = rec.hazard if hazard is None else hazard
    rows = zip(rec.times, rec.density_flux, rec.density_norm, rec.cumulative, h, rec.pos_part, rec.neg_part, rec.valid)
    write_csv(path, ARRIVAL_COLUMNS, rows)


def write_state(path, psi: WaveFunction):
    a = psi.amplitudes
    write_csv(path, STATE_COLUMNS, zip(psi.grid.x, a.real, a.imag))


def read_state(path, grid) -> WaveFunction:
    cols = read_csv(path)
    if not np.allclose(cols["x"], grid.x, rtol=0, atol=1e-9 * grid.dx):
        raise ValueError("snapshot was written on a different grid")
    return WaveFunction(grid, cols["re_psi"] + 1j * cols["im_psi"])
