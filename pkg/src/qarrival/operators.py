"""
Hamiltonians, projector, momentum and boundary operators on a Grid1D.

Conventions (hbar = 1):

* ``P = -i Dc`` with ``Dc`` the central first difference, Dirichlet edges.
* ``H = -L/(2m) + diag(V)`` with ``L`` the 3-point Laplacian.
* ``|x_b><x_b|`` is represented by ``E_b``, the matrix with ``1/dx`` at
  ``(b, b)``. Under the dx-weighted inner product this reproduces the sifting
  property ``<phi|E_b|psi> = conj(phi_b) psi_b``.

The restricted Hamiltonian is assembled two ways:

* direct: ``Hbar = pibar @ H`` (rows inside the detector are zero);
* decomposed: ``P pibar P/(2m) + pibar V pibar + K_term/2 - (i/2) N_dec``,
  i.e. a hermitian bulk, a hermitian boundary term and an anti-hermitian
  boundary flux term.

The two routes are different discretisations and only agree weakly (in
expectation values of smooth states) as dx -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .banded import bandwidths
from .grid import Grid1D, Region
from .states import WaveFunction

HERMITIAN = "hermitian"
ANTI_HERMITIAN = "anti-hermitian"
GENERAL = "general"


def _csr(m) -> sp.csr_array:
    out = sp.csr_array(m, dtype=complex)
    out.eliminate_zeros()
    out.sort_indices()
    return out


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Complex matrix acting on wave functions of one grid.

    ``kind`` is metadata set by the assembler; ``hermiticity_defect`` checks it.
    """

    matrix: sp.csr_array = field(repr=False)
    grid: Grid1D
    kind: str = GENERAL
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "matrix", _csr(self.matrix))
        if self.matrix.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match grid n={self.grid.n}")

    @property
    def bandwidth(self) -> int:
        return max(bandwidths(self.matrix))

    @property
    def n(self) -> int:
        return self.grid.n

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def max_abs(self) -> float:
        return float(np.abs(self.matrix.data).max()) if self.matrix.nnz else 0.0

    def apply(self, psi):
        if isinstance(psi, WaveFunction):
            if psi.grid != self.grid:
                raise ValueError("wave function lives on a different grid")
            return WaveFunction(self.grid, self.matrix @ psi.amplitudes)
        return self.matrix @ np.asarray(psi)

    def dagger(self) -> OperatorMatrix:
        return OperatorMatrix(self.matrix.conj().T, self.grid, self.kind, f"{self.name}^dagger")

    def matrix_element(self, phi, psi) -> complex:
        phi = _amps(phi)
        return self.grid.inner(phi, self.matrix @ _amps(psi))

    def expectation(self, psi) -> complex:
        return self.matrix_element(psi, psi)

    def hermitian_part(self) -> OperatorMatrix:
        return OperatorMatrix(0.5 * (self.matrix + self.matrix.conj().T), self.grid, HERMITIAN)

    def anti_hermitian_part(self) -> OperatorMatrix:
        return OperatorMatrix(0.5 * (self.matrix - self.matrix.conj().T), self.grid, ANTI_HERMITIAN)

    def hermiticity_defect(self) -> float:
        """``max|M - M^dagger| / max|M|`` (0 for the zero matrix)."""
        scale = self.max_abs()
        if scale == 0:
            return 0.0
        diff = self.matrix - self.matrix.conj().T
        return float(np.abs(diff.data).max() if diff.nnz else 0.0) / scale

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_defect() <= tol

    def __add__(self, other: OperatorMatrix) -> OperatorMatrix:
        _check_grid(self, other)
        return OperatorMatrix(self.matrix + other.matrix, self.grid)

    def __sub__(self, other: OperatorMatrix) -> OperatorMatrix:
        _check_grid(self, other)
        return OperatorMatrix(self.matrix - other.matrix, self.grid)

    def __neg__(self) -> OperatorMatrix:
        return OperatorMatrix(-self.matrix, self.grid, self.kind)

    def __mul__(self, c: complex) -> OperatorMatrix:
        return OperatorMatrix(c * self.matrix, self.grid)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            _check_grid(self, other)
            return OperatorMatrix(self.matrix @ other.matrix, self.grid)
        return self.apply(other)


def _amps(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, WaveFunction) else np.asarray(psi)


def _check_grid(a: OperatorMatrix, b: OperatorMatrix):
    if a.grid != b.grid:
        raise ValueError("operators live on different grids")


def _with(op: OperatorMatrix, kind: str, name: str) -> OperatorMatrix:
    return OperatorMatrix(op.matrix, op.grid, kind, name)


@dataclass(frozen=True, eq=False)
class Potential:
    """Real potential samples ``V(x_i)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValueError("potential must be a finite 1D array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, grid: Grid1D) -> Potential:
        return cls(np.zeros(grid.n))

    @classmethod
    def step(cls, grid: Grid1D, height: float, x_edge: float) -> Potential:
        return cls(np.where(grid.x >= x_edge, float(height), 0.0))

    @classmethod
    def gaussian_barrier(cls, grid: Grid1D, height: float, center: float, width: float) -> Potential:
        if width <= 0:
            raise ValueError("barrier width must be positive")
        return cls(height * np.exp(-((grid.x - center) ** 2) / (2 * width**2)))

    def shifted(self, c: float) -> Potential:
        return Potential(self.values + c)


def _check_mass(m: float):
    if not m > 0:
        raise ValueError(f"mass must be positive, got {m!r}")


def central_difference(grid: Grid1D) -> sp.csr_array:
    """Central first derivative with psi = 0 beyond the edges."""
    n, h = grid.n, 1.0 / (2 * grid.dx)
    return sp.diags_array([np.full(n - 1, -h), np.full(n - 1, h)], offsets=[-1, 1], format="csr")


def laplacian(grid: Grid1D) -> sp.csr_array:
    n, h2 = grid.n, 1.0 / grid.dx**2
    return sp.diags_array(
        [np.full(n - 1, h2), np.full(n, -2 * h2), np.full(n - 1, h2)], offsets=[-1, 0, 1], format="csr"
    )


def assemble_momentum(grid: Grid1D) -> OperatorMatrix:
    return OperatorMatrix(-1j * central_difference(grid), grid, HERMITIAN, "P")


def assemble_full(grid: Grid1D, V: Potential | None, m: float) -> OperatorMatrix:
    _check_mass(m)
    v = np.zeros(grid.n) if V is None else V.values
    if v.shape != (grid.n,):
        raise ValueError("potential does not match grid")
    H = -laplacian(grid) / (2 * m) + sp.diags_array(v)
    return OperatorMatrix(H, grid, HERMITIAN, "H")


def assemble_projector(region: Region) -> OperatorMatrix:
    return OperatorMatrix(sp.diags_array(region.complement_mask), region.grid, HERMITIAN, "pibar")


def assemble_restricted_direct(H: OperatorMatrix, region: Region) -> OperatorMatrix:
    """``Hbar = pibar @ H``: the matrix form of ``<psi|Hbar|phi> = <psi|pibar H|phi>``."""
    if not H.is_hermitian():
        raise ValueError("restricted Hamiltonian must be built from a hermitian H")
    return _with(assemble_projector(region) @ H, GENERAL, "Hbar_direct")


def point_projector(grid: Grid1D, index: int) -> sp.csr_array:
    """Discrete ``|x_b><x_b|``: ``1/dx`` at ``(b, b)``."""
    return sp.csr_array(([1.0 / grid.dx], ([index], [index])), shape=(grid.n, grid.n))


def assemble_boundary_J(grid: Grid1D, region: Region, m: float) -> OperatorMatrix:
    """Boundary flux operator ``sum_b sign_b {P, E_b} / (2m)``."""
    _check_mass(m)
    P = assemble_momentum(grid).matrix
    out = sp.csr_array((grid.n, grid.n), dtype=complex)
    for b, sign in region.boundary:
        E = point_projector(grid, b)
        out = out + sign * (P @ E + E @ P) / (2 * m)
    return OperatorMatrix(out, grid, HERMITIAN, "N_dec")


def assemble_boundary_K(grid: Grid1D, region: Region, m: float) -> OperatorMatrix:
    """Hermitian boundary term ``sum_b sign_b i[P, E_b] / (2m)``."""
    _check_mass(m)
    P = assemble_momentum(grid).matrix
    out = sp.csr_array((grid.n, grid.n), dtype=complex)
    for b, sign in region.boundary:
        E = point_projector(grid, b)
        out = out + sign * 1j * (P @ E - E @ P) / (2 * m)
    return OperatorMatrix(out, grid, HERMITIAN, "K_term")


def decomposed_terms(grid: Grid1D, region: Region, V: Potential | None, m: float) -> dict[str, OperatorMatrix]:
    """The individual pieces of the decomposed restricted Hamiltonian."""
    _check_mass(m)
    P = assemble_momentum(grid)
    pibar = assemble_projector(region)
    v = Potential.zero(grid) if V is None else V
    return {
        "kinetic": _with(P @ pibar @ P * (1 / (2 * m)), HERMITIAN, "P pibar P/2m"),
        "potential": _with(pibar @ OperatorMatrix(sp.diags_array(v.values), grid) @ pibar, HERMITIAN, "pibar V pibar"),
        "K_term": assemble_boundary_K(grid, region, m),
        "N_dec": assemble_boundary_J(grid, region, m),
    }


def assemble_restricted_decomposed(grid: Grid1D, region: Region, V: Potential | None, m: float) -> OperatorMatrix:
    t = decomposed_terms(grid, region, V, m)
    Hbar = t["kinetic"] + t["potential"] + 0.5 * t["K_term"] - 0.5j * t["N_dec"]
    return _with(Hbar, GENERAL, "Hbar_dec")


def flux_operator(Hbar: OperatorMatrix) -> OperatorMatrix:
    """``N = i (Hbar - Hbar^dagger)``."""
    return OperatorMatrix(1j * (Hbar.matrix - Hbar.matrix.conj().T), Hbar.grid, HERMITIAN, "N")


def region_flux_operator(M: OperatorMatrix, region: Region) -> OperatorMatrix:
    """Operator whose expectation is the outflow rate of the Dbar probability.

    Under ``d psi/dt = -i M psi`` one has ``d<psi|pibar|psi>/dt = -<psi|N|psi>``
    with ``N = i(pibar M - M^dagger pibar)``. For hermitian ``M`` this is the
    flux operator of the direct restricted Hamiltonian.
    """
    return flux_operator(assemble_projector(region) @ M)


def adjoint_identity_residual(Hbar: OperatorMatrix, N: OperatorMatrix) -> float:
    """Entrywise ``max|Hbar^dagger - Hbar - iN|``."""
    R = Hbar.matrix.conj().T - Hbar.matrix - 1j * N.matrix
    R.eliminate_zeros()
    return float(np.abs(R.data).max()) if R.nnz else 0.0


def weak_adjoint_residual(Hbar: OperatorMatrix, N: OperatorMatrix, psi) -> float:
    """``|<psi|Hbar^dagger - Hbar - iN|psi>|``: the weak form of the adjoint identity."""
    R = OperatorMatrix(Hbar.matrix.conj().T - Hbar.matrix - 1j * N.matrix, Hbar.grid)
    return abs(R.expectation(psi))


def support_indices(op: OperatorMatrix) -> np.ndarray:
    """Row and column indices touched by nonzero entries."""
    coo = sp.coo_array(op.matrix)
    nz = coo.data != 0
    return np.unique(np.concatenate([coo.row[nz], coo.col[nz]]))
