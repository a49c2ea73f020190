import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import smooth_packet
from qarrival.config import SimulationConfig, build
from qarrival.dynamics import PropagatorConfig, evolve
from qarrival.grid import DetectorSpec, make_grid, make_region
from qarrival.observables import (
    boundary_flux,
    continuity_residual,
    detector_probability,
    flux_volume_form,
    probability_current,
    refinement_order,
    region_probability,
)
from qarrival.operators import (
    Potential,
    assemble_full,
    assemble_restricted_direct,
    decomposed_terms,
    flux_operator,
)
from qarrival.states import FreeGaussian, WaveFunction, gaussian_packet


@pytest.fixture
def half801(grid801):
    return make_region(grid801, DetectorSpec.half_line(5.0))


def test_plane_wave_current(grid801):
    k, m = 1.4, 0.7
    j = probability_current(WaveFunction(grid801, np.exp(1j * k * grid801.x)), m)
    assert np.allclose(j[1:-1], np.sin(k * grid801.dx) / (m * grid801.dx), rtol=0, atol=1e-12)


def test_real_state_has_no_current(grid801):
    psi = WaveFunction(grid801, np.exp(-(grid801.x**2)) * np.cos(grid801.x))
    assert np.max(np.abs(probability_current(psi, 1.0))) <= 1e-14


def test_current_matches_free_gaussian_oracle():
    G = FreeGaussian(0.0, 1.0, 1.5, 1.0, 2.0)
    errs = []
    for n in (801, 1601):
        g = make_grid(-20, 20, n)
        j = probability_current(WaveFunction(g, G.amplitude(g.x)), 1.0)
        errs.append(np.max(np.abs(j - G.current(g.x))))
    assert refinement_order(*errs) == pytest.approx(2.0, abs=0.05)


def test_current_rejects_bad_mass(grid801):
    with pytest.raises(ValueError):
        probability_current(gaussian_packet(grid801, 0, 1, 0), 0.0)


def test_boundary_flux_examples(grid801, half801):
    far = gaussian_packet(grid801, -10.0, 1.0, 2.0)
    assert abs(boundary_flux(far, half801, 1.0)) <= 1e-12
    at = gaussian_packet(grid801, 5.0, 1.0, 2.0)
    assert boundary_flux(at, half801, 1.0) > 0
    assert boundary_flux(at, half801, 1.0, "bond") > 0
    interval = make_region(grid801, DetectorSpec.interval(5.0, 8.0))
    real = gaussian_packet(grid801, -2.0, 2.0, 0.0)
    assert abs(boundary_flux(real, interval, 1.0)) <= 1e-12
    with pytest.raises(ValueError):
        boundary_flux(at, half801, 1.0, "upwind")


def test_boundary_flux_matches_analytic_current():
    # central stencil sits at the last Dbar point; compare at the same point
    G = FreeGaussian(0.0, 1.0, 1.5, 1.0, 1.0)
    errs = []
    for n in (801, 1601):
        g = make_grid(-20, 20, n)
        r = make_region(g, DetectorSpec.half_line(2.0))
        xb = g.x[r.boundary[0][0]]
        errs.append(abs(boundary_flux(G.amplitude(g.x), r, 1.0) - G.current(xb)))
    assert refinement_order(*errs) == pytest.approx(2.0, abs=0.1)


def test_region_probability_examples(grid801, half801):
    left = gaussian_packet(grid801, -8.0, 1.0, 1.0)
    assert abs(region_probability(left, half801) - 1) <= 1e-10
    right = gaussian_packet(grid801, 11.0, 0.8, 1.0)
    assert region_probability(right, half801) <= 1e-10


def test_flux_volume_form(grid801, half801):
    k = 1.1
    wave = WaveFunction(grid801, np.exp(1j * k * grid801.x))
    ref = boundary_flux(wave, half801, 1.0)
    assert abs(flux_volume_form(wave, half801, 1.0) - ref) <= grid801.dx * abs(ref)
    real = gaussian_packet(grid801, 4.0, 1.0, 0.0)
    assert abs(flux_volume_form(real, half801, 1.0)) <= 1e-14


def test_flux_volume_form_first_order():
    G = FreeGaussian(0.0, 1.0, 1.5, 1.0, 1.0)
    diffs = []
    for n in (801, 1601, 3201):
        g = make_grid(-20, 20, n)
        r = make_region(g, DetectorSpec.half_line(2.0))
        psi = WaveFunction(g, G.amplitude(g.x))
        diffs.append(abs(flux_volume_form(psi, r, 1.0) - boundary_flux(psi, r, 1.0)))
    orders = [refinement_order(diffs[i], diffs[i + 1]) for i in range(2)]
    assert orders == pytest.approx([1.0, 1.0], abs=0.1)


# -- continuity ---------------------------------------------------------------


def test_stationary_state_continuity(small_grid, small_region):
    H = assemble_full(small_grid, Potential(0.5 * small_grid.x**2), 1.0)
    _, vecs = np.linalg.eigh(H.dense())
    psi0 = WaveFunction(small_grid, vecs[:, 1]).normalized()
    traj = evolve(H, psi0, PropagatorConfig(0.01, 200, record_every=10), region=small_region,
                  keep_states=True, edge_tol=np.inf)
    for stencil in ("bond", "central"):
        assert continuity_residual(traj, small_region, 1.0, stencil).max_abs <= 1e-12


def test_continuity_away_from_boundary(grid801, half801):
    psi0 = gaussian_packet(grid801, -8.0, 1.0, -0.5)
    traj = evolve(assemble_full(grid801, None, 1.0), psi0, PropagatorConfig(0.005, 400, record_every=20),
                  region=half801, keep_states=True)
    for stencil in ("bond", "central"):
        assert continuity_residual(traj, half801, 1.0, stencil).max_abs <= 1e-10


def test_continuity_step_midpoint_is_exact(grid801, half801):
    psi0 = gaussian_packet(grid801, -1.0, 1.0, 2.0)
    traj = evolve(assemble_full(grid801, None, 1.0), psi0, PropagatorConfig(0.005, 600, record_every=3), region=half801)
    exact = continuity_residual(traj, half801, midpoint="step").max_abs
    averaged = continuity_residual(traj, half801).max_abs
    assert exact <= 1e-11 < averaged


def test_continuity_input_validation(grid801, half801):
    traj = evolve(assemble_full(grid801, None, 1.0), gaussian_packet(grid801, 0, 1, 1), PropagatorConfig(0.01, 4),
                  region=half801)
    other = make_region(grid801, DetectorSpec.half_line(3.0))
    with pytest.raises(ValueError):
        continuity_residual(traj, other)
    with pytest.raises(ValueError):
        continuity_residual(traj, half801, stencil="central")  # no states recorded
    with pytest.raises(ValueError):
        continuity_residual(traj, half801, midpoint="left")


def test_continuity_dx_refinement_central_stencil():
    # the central stencil sits half a cell from the bond the probability
    # actually crosses, so its residual is first order in dx
    cfg = SimulationConfig()
    res = []
    for n in (1601, 3201):
        s = build(cfg.replace("grid.n", n))
        traj = evolve(assemble_full(s.grid, s.potential, s.mass), s.psi0, s.propagator, region=s.region,
                      keep_states=True)
        res.append(continuity_residual(traj, s.region, s.mass, "central").max_abs)
    assert 2.0 <= res[0] / res[1] <= 4.0


# -- shared stencils and scaling ----------------------------------------------

_amp = st.floats(-2, 2, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(
    re=st.lists(_amp, min_size=40, max_size=40),
    im=st.lists(_amp, min_size=40, max_size=40),
    lo=st.integers(4, 30),
    width=st.integers(0, 5),
    m=st.floats(0.1, 10),
)
def test_flux_operators_share_stencils(re, im, lo, width, m):
    g = make_grid(0, 3.9, 40)
    spec = DetectorSpec.half_line(float(g.x[lo])) if width == 0 else DetectorSpec.interval(float(g.x[lo]), float(g.x[lo + width]))
    r = make_region(g, spec)
    psi = WaveFunction(g, np.array(re) + 1j * np.array(im))
    n_dec = decomposed_terms(g, r, None, m)["N_dec"].expectation(psi).real
    n_dir = flux_operator(assemble_restricted_direct(assemble_full(g, None, m), r)).expectation(psi).real
    scale = 1 + np.max(np.abs(psi.amplitudes)) ** 2 / (m * g.dx)
    assert abs(n_dec - boundary_flux(psi, r, m, "central")) <= 1e-12 * scale
    assert abs(n_dir - boundary_flux(psi, r, m, "bond")) <= 1e-12 * scale
    assert abs(region_probability(psi, r) + detector_probability(psi, r) - psi.norm2) <= 1e-12 * (1 + psi.norm2)


@settings(max_examples=50, deadline=None)
@given(phase=st.floats(0, 2 * np.pi), c=st.floats(0.1, 10), k0=st.floats(-3, 3))
def test_current_phase_invariant_and_quadratic(phase, c, k0):
    g = make_grid(-10, 10, 201)
    psi = smooth_packet(g, 0.0, 1.0, k0)
    j = probability_current(psi, 1.0)
    rotated = probability_current(WaveFunction(g, np.exp(1j * phase) * psi.amplitudes), 1.0)
    scaled = probability_current(WaveFunction(g, c * psi.amplitudes), 1.0)
    assert np.allclose(rotated, j, rtol=0, atol=1e-13)
    assert np.allclose(scaled, c**2 * j, rtol=1e-12, atol=1e-13)


def test_refinement_order():
    assert refinement_order(4.0, 1.0) == pytest.approx(2.0)
    assert refinement_order(9.0, 1.0, factor=3) == pytest.approx(2.0)
