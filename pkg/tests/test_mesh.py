import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bulkface.errors import ModeError
from bulkface.mesh import boundary_weights, build_rectangle_geometry, take_trace

sizes = st.integers(1, 12)


@given(sizes, sizes, st.sampled_from(["full", "upper_only", "bulk_only"]))
@settings(max_examples=40, deadline=None)
def test_measures_and_orientation(nx, ny, mode):
    geom = build_rectangle_geometry(nx, ny, mode)
    meas = geom.measures
    assert np.all(geom.plus.signed_areas() > 0)
    assert np.isclose(geom.plus.signed_areas().sum(), 1.0)
    assert np.isclose(meas.lumped_plus.sum(), 1.0)
    expected_V = {"full": 3.0, "upper_only": 2.0, "bulk_only": 1.0}[mode]
    assert np.isclose(meas.V, expected_V)
    assert np.isclose(geom.lumped_weights.sum(), expected_V)
    # right triangles: no obtuse angles (needed for the discrete maximum principle)
    assert geom.plus.max_angles().max() <= np.pi / 2 + 1e-12


@given(sizes, sizes)
@settings(max_examples=30, deadline=None)
def test_traces_coincide_with_interface_nodes(nx, ny):
    geom = build_rectangle_geometry(nx, ny, "full")
    xy = geom.dof_coordinates
    gamma = xy[geom.slices["gamma"]]
    for side in ("plus", "minus"):
        assert np.allclose(xy[geom.trace_dofs(side)], gamma)
    assert np.allclose(geom.interface.segment_lengths().sum(), 1.0)


def test_dof_counts_for_benchmark_grid():
    geom = build_rectangle_geometry(16, 16, "full")
    assert geom.sizes == {"plus": 289, "minus": 289, "gamma": 17}
    assert geom.n_dofs == 595


def test_outer_boundary_length():
    geom = build_rectangle_geometry(5, 3, "full")
    # three unit sides per bulk are outer, the fourth is the interface
    assert np.isclose(boundary_weights(geom.plus, "outer").sum(), 3.0)
    assert np.isclose(boundary_weights(geom.plus, "interface").sum(), 1.0)
    bulk = build_rectangle_geometry(5, 3, "bulk_only")
    assert np.isclose(boundary_weights(bulk.plus, "outer").sum(), 4.0)


def test_trace_in_missing_mode_raises():
    geom = build_rectangle_geometry(3, 3, "upper_only")
    with pytest.raises(ModeError):
        geom.trace_dofs("minus")
    field = np.arange(geom.n_dofs, dtype=float)
    assert np.array_equal(take_trace(geom, field, "plus"), field[geom.trace_dofs("plus")])


@pytest.mark.parametrize("bad", [(0, 3), (3, 0)])
def test_rejects_empty_grid(bad):
    with pytest.raises(ValueError):
        build_rectangle_geometry(*bad)


def test_unknown_mode():
    with pytest.raises(ValueError):
        build_rectangle_geometry(2, 2, "sideways")
