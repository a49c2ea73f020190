"""
Time propagation: Crank-Nicolson for production runs, dense exponentials as oracle.

Crank-Nicolson solves ``(I + i dt/2 M) psi' = (I - i dt/2 M) psi`` with a banded
LU factorised once per run. For hermitian ``M`` the step is unitary; for the
restricted Hamiltonian it reproduces the norm loss exactly in the discrete form

    ||psi'||^2 - ||psi||^2 = -dt <m|N|m>,   m = (psi + psi')/2,  N = i(M - M^dagger)

which is why trajectories also record the per-step midpoint flux.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .banded import BandedLU
from .grid import Grid1D, Region
from .operators import OperatorMatrix, region_flux_operator
from .states import WaveFunction

log = logging.getLogger(__name__)

SCHEMES = ("crank_nicolson", "exact_eigen")
EDGE_WIDTH = 5
EDGE_TOL = 1e-6
MAX_DENSE_N = 256


class EdgeContaminationError(RuntimeError):
    """The state reached the Dirichlet grid edges."""

    def __init__(self, t: float, value: float, tol: float = EDGE_TOL):
        super().__init__(f"edge amplitude {value:.3e} exceeds {tol:g} of the norm at t={t:.6g}")
        self.t = t
        self.value = value


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float
    n_steps: int
    record_every: int = 1
    scheme: str = "crank_nicolson"

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def t_final(self) -> float:
        return self.n_steps * self.dt

    def record_steps(self) -> np.ndarray:
        return np.arange(0, self.n_steps + 1, self.record_every)


@dataclass
class Trajectory:
    grid: Grid1D
    times: np.ndarray
    norm2: np.ndarray
    pbar: np.ndarray
    flux: np.ndarray
    edge_amp: np.ndarray
    initial: WaveFunction
    final: WaveFunction
    region: Region | None = None
    # mean per-step midpoint flux over each recorded interval (CN only)
    flux_mid: np.ndarray | None = None
    states: list[WaveFunction] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.times.size


def edge_amplitude(a: np.ndarray, width: int = EDGE_WIDTH) -> float:
    """Largest |psi| among the outermost ``width`` samples on either side."""
    edge = max(np.abs(a[:width]).max(), np.abs(a[-width:]).max())
    return float(edge)


def spectral_bound(M: OperatorMatrix) -> float:
    """Gershgorin bound on |spectrum|; equals 2/(m dx^2) + max V for H."""
    return float(np.abs(M.matrix).sum(axis=1).max())


class CrankNicolson:
    def __init__(self, M: OperatorMatrix, dt: float):
        n = M.n
        eye = sp.identity(n, dtype=complex, format="csr")
        self.lhs = BandedLU(eye + 0.5j * dt * M.matrix)
        self.rhs = (eye - 0.5j * dt * M.matrix).tocsr()

    def step(self, a: np.ndarray) -> np.ndarray:
        return self.lhs.solve(self.rhs @ a)


class _Recorder:
    def __init__(self, grid, region, flux_op, keep_states):
        self.grid, self.region, self.flux_op, self.keep = grid, region, flux_op, keep_states
        self.times, self.norm2, self.pbar, self.flux, self.edge = [], [], [], [], []
        self.states = [] if keep_states else None

    def __call__(self, t, a):
        dx = self.grid.dx
        n2 = dx * np.sum(np.abs(a) ** 2)
        self.times.append(t)
        self.norm2.append(n2)
        self.pbar.append(dx * np.sum(self.region.complement_mask * np.abs(a) ** 2) if self.region else np.nan)
        self.flux.append(self.flux_op.expectation(a).real if self.flux_op is not None else np.nan)
        self.edge.append(edge_amplitude(a) / np.sqrt(n2) if n2 > 0 else 0.0)
        if self.keep:
            self.states.append(WaveFunction(self.grid, a.copy()))

    def build(self, psi0, a_final, flux_mid=None):
        arr = lambda v: np.asarray(v, dtype=float)  # noqa: E731
        return Trajectory(
            grid=self.grid,
            times=arr(self.times),
            norm2=arr(self.norm2),
            pbar=arr(self.pbar),
            flux=arr(self.flux),
            edge_amp=arr(self.edge),
            initial=psi0.copy(),
            final=WaveFunction(self.grid, a_final),
            region=self.region,
            flux_mid=None if flux_mid is None else arr(flux_mid),
            states=self.states,
        )


def _default_flux_op(M, region, flux_op):
    if flux_op is None and region is not None:
        return region_flux_operator(M, region)
    return flux_op


def evolve(
    M: OperatorMatrix,
    psi0: WaveFunction,
    cfg: PropagatorConfig,
    region: Region | None = None,
    flux_op: OperatorMatrix | None = None,
    keep_states: bool = False,
    edge_tol: float = EDGE_TOL,
) -> Trajectory:
    """Propagate ``psi0`` under ``exp(-i M t)``.

    With a ``region`` the trajectory records the Dbar probability and, unless
    ``flux_op`` is given, the outflow ``<psi|i(pibar M - M^dagger pibar)|psi>``.
    For restricted generators pass ``flux_op=flux_operator(M)`` to track the
    norm loss instead.
    """
    if psi0.grid != M.grid:
        raise ValueError("initial state and operator live on different grids")
    if region is not None and region.grid != M.grid:
        raise ValueError("region and operator live on different grids")
    flux_op = _default_flux_op(M, region, flux_op)
    if cfg.scheme == "exact_eigen":
        times = cfg.record_steps() * cfg.dt
        return evolve_exact_small(M, psi0, times, region=region, flux_op=flux_op, keep_states=keep_states)

    bound = spectral_bound(M)
    if cfg.dt * bound > 1:
        log.warning("dt*E_max = %.3g > 1: high-frequency modes are phase-inaccurate", cfg.dt * bound)

    cn = CrankNicolson(M, cfg.dt)
    rec = _Recorder(M.grid, region, flux_op, keep_states)
    a = psi0.amplitudes.copy()
    rec(0.0, a)
    flux_mid, acc = [], 0.0
    for s in range(1, cfg.n_steps + 1):
        new = cn.step(a)
        if flux_op is not None:
            acc += flux_op.expectation(0.5 * (a + new)).real
        a = new
        edge = edge_amplitude(a)
        n2 = M.grid.dx * np.sum(np.abs(a) ** 2)
        if not np.isfinite(n2):
            raise FloatingPointError(f"non-finite state at step {s}")
        if edge > edge_tol * np.sqrt(n2):
            raise EdgeContaminationError(s * cfg.dt, edge / np.sqrt(n2), edge_tol)
        if s % cfg.record_every == 0:
            rec(s * cfg.dt, a)
            flux_mid.append(acc / cfg.record_every)
            acc = 0.0
    return rec.build(psi0, a, flux_mid if flux_op is not None else None)


class DenseExponential:
    """``exp(-i M t)`` for small dense matrices.

    Hermitian matrices use the spectral decomposition; anything else goes
    through the complex Schur form ``M = Z T Z^dagger``.
    """

    def __init__(self, M: OperatorMatrix):
        if M.n > MAX_DENSE_N:
            raise ValueError(f"dense oracle limited to n <= {MAX_DENSE_N}, got n={M.n}")
        A = M.dense()
        self.zero = not np.any(A)
        self.diagonal = np.diag(A) if not np.any(A - np.diag(np.diag(A))) else None
        self.hermitian = M.is_hermitian()
        if self.zero or self.diagonal is not None:
            return
        if self.hermitian:
            self.w, self.V = np.linalg.eigh(0.5 * (A + A.conj().T))
        else:
            self.T, self.Z = sla.schur(A, output="complex")

    def apply(self, a: np.ndarray, t: float) -> np.ndarray:
        if self.zero or t == 0:
            return a.copy()
        if self.diagonal is not None:
            return np.exp(-1j * self.diagonal * t) * a
        if self.hermitian:
            return self.V @ (np.exp(-1j * self.w * t) * (self.V.conj().T @ a))
        return self.Z @ (sla.expm(-1j * t * self.T) @ (self.Z.conj().T @ a))


def evolve_exact_small(
    M: OperatorMatrix,
    psi0: WaveFunction,
    times,
    region: Region | None = None,
    flux_op: OperatorMatrix | None = None,
    keep_states: bool = True,
) -> Trajectory:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1D sequence")
    U = DenseExponential(M)
    flux_op = _default_flux_op(M, region, flux_op)
    rec = _Recorder(M.grid, region, flux_op, keep_states)
    a = psi0.amplitudes
    for t in times:
        a = U.apply(psi0.amplitudes, t)
        rec(float(t), a)
    return rec.build(psi0, a)


@dataclass
class SemigroupReport:
    times: np.ndarray
    ratio: np.ndarray  # ||exp(-i Hbar t) psi|| / ||psi||
    composition_residual: float  # max over (t, s) pairs
    contraction_violations: list[float]  # times where ratio > 1

    @property
    def is_contraction(self) -> bool:
        return not self.contraction_violations

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.ratio) < 0))


def semigroup_diagnostic(Hbar: OperatorMatrix, psi: WaveFunction, t_list, tol: float = 1e-12) -> SemigroupReport:
    """Norm ratios and the composition law ``U(t+s) = U(t) U(s)`` with the exact oracle.

    Contraction is reported, not enforced: the discrete boundary flux
    operator need not be positive semidefinite on the Dbar subspace.
    """
    t_list = np.asarray(t_list, dtype=float)
    U = DenseExponential(Hbar)
    a0 = psi.amplitudes
    n0 = np.linalg.norm(a0)
    ratio = np.array([np.linalg.norm(U.apply(a0, t)) / n0 for t in t_list])
    worst = 0.0
    for t in t_list:
        for s in t_list:
            lhs = U.apply(a0, t + s)
            rhs = U.apply(U.apply(a0, s), t)
            worst = max(worst, float(np.sqrt(psi.grid.dx) * np.linalg.norm(lhs - rhs)))
    violations = [float(t) for t, r in zip(t_list, ratio) if r > 1 + tol]
    return SemigroupReport(t_list, ratio, worst, violations)
