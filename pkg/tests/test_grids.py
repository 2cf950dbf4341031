"""Domains, grids, ghost bands, fields, and the sup-norm machinery."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispersal import (
    Field,
    ValidationError,
    box,
    build_grid,
    constant_field,
    field_from_function,
    periodic_cell,
    read_field_csv,
    sup_distance,
    sup_norm,
    write_field_csv,
)


def test_interval_node_count_and_coordinates():
    grid = build_grid(box(0.0, 1.0), 0.25)
    assert grid.num_nodes == 5
    np.testing.assert_allclose(grid.coordinates[0], [0.0, 0.25, 0.5, 0.75, 1.0], atol=0.0)
    assert not grid.ghost_mask.any()


def test_interval_with_ghost_band():
    grid = build_grid(box(0.0, 1.0), 0.25, ghost_width=0.5)
    assert grid.num_nodes == 9
    assert grid.ghost_cells == 2
    np.testing.assert_allclose(
        grid.coordinates[0], [-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5], atol=1e-15
    )
    # Two ghost nodes on each side, physical nodes in between.
    assert list(grid.ghost_mask) == [True, True, False, False, False, False, False, True, True]


def test_periodic_cell_identifies_the_wrap_node():
    grid = build_grid(periodic_cell(1.0), 0.25)
    assert grid.num_nodes == 4
    np.testing.assert_allclose(grid.coordinates[0], [0.0, 0.25, 0.5, 0.75], atol=0.0)


def test_ghost_band_rounds_up_to_whole_cells():
    grid = build_grid(box(0.0, 1.0), 0.25, ghost_width=0.3)
    assert grid.ghost_cells == 2  # 0.3 / 0.25 rounds up


def test_incompatible_spacing_is_rejected():
    with pytest.raises(ValidationError, match="incompatible spacing"):
        build_grid(box(0.0, 1.0), 0.3)
    with pytest.raises(ValidationError, match="incompatible spacing"):
        build_grid(periodic_cell(2.0 * math.pi), 0.5)


def test_periodic_grid_refuses_ghosts():
    with pytest.raises(ValidationError):
        build_grid(periodic_cell(1.0), 0.25, ghost_width=0.25)


def test_domain_validation():
    with pytest.raises(ValidationError):
        box(1.0, 0.0)
    with pytest.raises(ValidationError):
        periodic_cell(-2.0)
    with pytest.raises(ValidationError):
        box((0.0, 0.0), (1.0,))


def test_build_grid_is_bitwise_deterministic():
    a = build_grid(box(0.0, 2.0 * math.pi), 2.0 * math.pi / 512, ghost_width=0.4)
    b = build_grid(box(0.0, 2.0 * math.pi), 2.0 * math.pi / 512, ghost_width=0.4)
    for xa, xb in zip(a.coordinates, b.coordinates):
        assert np.array_equal(xa, xb)  # identical bits, not merely close


def test_two_dimensional_grid_layout():
    grid = build_grid(box((0.0, 0.0), (1.0, 2.0)), 0.5)
    assert grid.shape == (3, 5)
    assert grid.num_nodes == 15
    # C-order flattening: the second axis varies fastest.
    np.testing.assert_allclose(grid.coordinates[0][:5], np.zeros(5), atol=0.0)
    np.testing.assert_allclose(grid.coordinates[1][:5], [0.0, 0.5, 1.0, 1.5, 2.0], atol=0.0)


def test_sup_distance_examples():
    grid = build_grid(box(0.0, 1.0), 0.25)
    f = constant_field(grid, 2.0)
    g = constant_field(grid, -1.0)
    assert sup_distance(f, f) == 0.0
    assert sup_distance(f, g) == 3.0
    ramp = field_from_function(grid, lambda x: x)
    assert sup_distance(ramp, constant_field(grid, 0.0)) == 1.0


def test_sup_distance_ignores_ghost_nodes():
    grid = build_grid(box(0.0, 1.0), 0.25, ghost_width=0.25)
    values = np.zeros(grid.num_nodes)
    values[grid.ghost_mask] = 99.0
    assert sup_distance(Field(grid, values), constant_field(grid, 0.0)) == 0.0
    assert sup_norm(Field(grid, values)) == 0.0


def test_sup_distance_rejects_mismatched_grids():
    f = constant_field(build_grid(box(0.0, 1.0), 0.25), 1.0)
    g = constant_field(build_grid(box(0.0, 1.0), 0.5), 1.0)
    with pytest.raises(ValidationError, match="grid"):
        sup_distance(f, g)


def test_field_value_count_is_validated():
    grid = build_grid(box(0.0, 1.0), 0.25)
    with pytest.raises(ValidationError):
        Field(grid, np.zeros(4))


def test_field_csv_round_trip(tmp_path):
    grid = build_grid(box(0.0, 1.0), 0.125, ghost_width=0.25)
    field = field_from_function(grid, lambda x: np.sin(3.0 * x), time=0.5)
    path = tmp_path / "field.csv"
    write_field_csv(field, path)
    header = path.read_text().splitlines()[0]
    assert header == "x,value"
    restored = read_field_csv(grid, path, time=0.5)
    keep = ~grid.ghost_mask
    np.testing.assert_array_equal(restored.values[keep], field.values[keep])
    assert np.all(restored.values[grid.ghost_mask] == 0.0)


def test_field_csv_round_trip_2d(tmp_path):
    grid = build_grid(box((0.0, 0.0), (1.0, 1.0)), 0.25)
    field = field_from_function(grid, lambda x, y: x + 10.0 * y)
    path = tmp_path / "field2.csv"
    write_field_csv(field, path)
    assert path.read_text().splitlines()[0] == "x,y,value"
    restored = read_field_csv(grid, path)
    np.testing.assert_array_equal(restored.values, field.values)


def test_read_field_csv_rejects_wrong_grid(tmp_path):
    grid = build_grid(box(0.0, 1.0), 0.25)
    path = tmp_path / "field.csv"
    write_field_csv(constant_field(grid, 1.0), path)
    other = build_grid(box(0.0, 1.0), 0.125)
    with pytest.raises(ValidationError):
        read_field_csv(other, path)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=15, max_size=15))
def test_sup_distance_is_a_metric(values):
    """Symmetry and the triangle inequality on random field triples."""
    grid = build_grid(box(0.0, 1.0), 0.25)
    chunks = [np.array(values[i : i + 5]) for i in (0, 5, 10)]
    f, g, k = (Field(grid, c) for c in chunks)
    assert sup_distance(f, g) == sup_distance(g, f)
    assert sup_distance(f, k) <= sup_distance(f, g) + sup_distance(g, k) + 1e-9
    assert sup_distance(f, f) == 0.0
