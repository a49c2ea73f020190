import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qarrival.grid import DetectorSpec, GridError, characteristic_vector, make_grid, make_region


def test_spacing_and_points():
    g = make_grid(-20, 20, 801)
    assert g.dx == pytest.approx(0.05, rel=1e-15)
    assert make_grid(0, 1, 11).x[5] == pytest.approx(0.5, abs=1e-15)


def test_quadrature_of_one(grid801):
    # uniform weight dx at all n points: n*dx = length*(n/(n-1)); the edge
    # points carry the O(dx) excess that the zero-edge convention tolerates
    g = grid801
    assert g.quad(np.ones(g.n)) == pytest.approx(g.n * g.dx, rel=1e-12)
    interior = g.quad(np.r_[0.5, np.ones(g.n - 2), 0.5])
    assert interior == pytest.approx(40.0, rel=1e-12)


def test_last_point_hits_x_max():
    g = make_grid(-40, 40, 1601)
    assert abs(g.x[-1] - 40.0) <= 4 * np.spacing(40.0)
    assert not g.x.flags.writeable


@pytest.mark.parametrize(
    "args",
    [(-1, 1, 7), (1, -1, 16), (0, 0, 16), (0, math.inf, 16), (math.nan, 1, 16), (0, 1, 10.5)],
)
def test_make_grid_rejects(args):
    with pytest.raises(GridError):
        make_grid(*args)


def test_half_line_region(grid801):
    r = make_region(grid801, DetectorSpec.half_line(5.0))
    (b, sign), = r.boundary
    assert sign == +1
    assert grid801.x[b] == pytest.approx(4.95, abs=1e-12)
    chi = characteristic_vector(r)
    assert np.all(chi[grid801.x >= 5 - 1e-9] == 0)
    assert np.all(chi[grid801.x < 5 - 1e-9] == 1)


def test_interval_region(grid801):
    r = make_region(grid801, DetectorSpec.interval(5.0, 8.0))
    (b0, s0), (b1, s1) = r.boundary
    assert (s0, s1) == (+1, -1)
    assert grid801.x[b0] == pytest.approx(4.95, abs=1e-12)
    assert grid801.x[b1] == pytest.approx(8.05, abs=1e-12)
    zeros = np.flatnonzero(characteristic_vector(r) == 0)
    assert np.array_equal(zeros, np.arange(zeros[0], zeros[-1] + 1))


def test_mask_quadrature_matches_length(grid801):
    r = make_region(grid801, DetectorSpec.half_line(5.0))
    assert abs(grid801.quad(r.complement_mask) - (5.0 - (-20.0))) <= grid801.dx


def test_boundary_is_last_dbar_point(grid801):
    for spec in (DetectorSpec.half_line(3.0), DetectorSpec.interval(-2.0, 7.5)):
        r = make_region(grid801, spec)
        chi = r.complement_mask
        for b, s in r.boundary:
            assert chi[b] == 1 and chi[b + s] == 0


@pytest.mark.parametrize(
    "spec",
    [
        DetectorSpec.half_line(5.01),  # off-grid
        DetectorSpec.half_line(-20.0),  # at the edge
        DetectorSpec.half_line(-19.95),
        DetectorSpec.half_line(20.0),  # single-point detector
        DetectorSpec.half_line(30.0),
        DetectorSpec.interval(5.0, 5.0),
        DetectorSpec.interval(5.0, 19.95),  # touches the right edge
        DetectorSpec("disk", x_d=1.0),
    ],
)
def test_make_region_rejects(grid801, spec):
    with pytest.raises(GridError):
        make_region(grid801, spec)


def test_region_needs_four_complement_points():
    g = make_grid(0, 7, 8)
    with pytest.raises(GridError):
        make_region(g, DetectorSpec.half_line(3.0))
    assert make_region(g, DetectorSpec.half_line(4.0)).n_complement == 4


@given(st.integers(4, 790), st.integers(0, 6))
def test_region_partition_properties(i, width):
    g = make_grid(-20, 20, 801)
    x_d = float(g.x[i])
    spec = DetectorSpec.half_line(x_d) if width == 0 else None
    if spec is None:
        j = i + width
        if j > g.n - 3:
            return
        spec = DetectorSpec.interval(x_d, float(g.x[j]))
    r = make_region(g, spec)
    assert np.array_equal(r.complement_mask + r.detector_mask, np.ones(g.n))
    again = make_region(g, spec)
    assert again.same_as(r) and again.boundary == r.boundary
    signs = [s for _, s in r.boundary]
    assert signs == ([+1] if spec.kind == "half_line" else [+1, -1])
