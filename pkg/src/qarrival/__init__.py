"""Arrival-time densities from a restricted Hamiltonian with a non-hermitian boundary term."""

from .arrival import (
    ArrivalRecord,
    arrival_density_flux,
    arrival_density_norm,
    arrival_record,
    hazard_reconstruction,
    restricted_vs_projected_diagnostic,
    split_arrival_departure,
)
from .dynamics import PropagatorConfig, Trajectory, evolve, evolve_exact_small, semigroup_diagnostic
from .grid import DetectorSpec, Grid1D, Region, characteristic_vector, make_grid, make_region
from .observables import (
    boundary_flux,
    continuity_residual,
    flux_volume_form,
    probability_current,
    region_probability,
)
from .operators import (
    OperatorMatrix,
    Potential,
    adjoint_identity_residual,
    assemble_boundary_J,
    assemble_boundary_K,
    assemble_full,
    assemble_momentum,
    assemble_projector,
    assemble_restricted_decomposed,
    assemble_restricted_direct,
    flux_operator,
)
from .states import WaveFunction, free_gaussian_analytic, gaussian_packet, restrict

__version__ = "0.1.0"
