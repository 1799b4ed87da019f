import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmmellam.mesh import (MeshError, PolygonalMesh, build_cartesian, build_distorted, cell_regularity,
                           mesh_regularity, subtriangulate)


def test_cartesian_standard_cells():
    m = build_cartesian(16, 16, 1000, 1000)
    assert m.n_cells == 256
    assert np.allclose(m.areas, 62.5 ** 2)
    assert np.allclose(m.edge_lengths, 62.5)


def test_single_unit_cell():
    m = build_cartesian(1, 1, 1, 1)
    assert m.n_cells == 1 and m.n_edges == 4
    assert m.areas[0] == pytest.approx(1.0)
    assert np.allclose(m.centers[0], [0.5, 0.5])


def test_two_cell_adjacency():
    m = build_cartesian(2, 1, 2, 1)
    inner = np.flatnonzero(m.edge_cells[:, 1] >= 0)
    assert len(inner) == 1
    f = np.flatnonzero(m.cell_edges == inner[0])
    assert sorted(m.cell_of[f]) == [0, 1]
    assert np.allclose(m.cell_edge_normals[f[0]] + m.cell_edge_normals[f[1]], 0.0)


@pytest.mark.parametrize("bad", [(0, 1, 1, 1), (1, 1, 0, 1), (1, 1, 1, -2)])
def test_cartesian_rejects_bad_dimensions(bad):
    with pytest.raises(MeshError):
        build_cartesian(*bad)


def test_clockwise_loops_are_reoriented():
    m = PolygonalMesh([(0, 0), (1, 0), (1, 1), (0, 1)], [[0, 3, 2, 1]])
    assert m.areas[0] == pytest.approx(1.0)


def test_non_star_shaped_cell_rejected():
    # arrow-head polygon whose centroid sees one edge from behind
    verts = [(0, 0), (4, 0), (4, 4), (3.9, 0.1), (0.1, 0.1), (0, 4)]
    with pytest.raises(MeshError):
        PolygonalMesh(verts, [list(range(6))])


@pytest.mark.parametrize("kind, amp", [("kershaw", 1.0), ("hexahedral", 0.5)])
def test_degenerating_amplitudes_rejected(kind, amp):
    with pytest.raises(MeshError):
        build_distorted(kind, 4, 4, 1, 1, amplitude=amp)


@pytest.mark.parametrize("kind", ["kershaw", "hexahedral", "nonconforming"])
def test_distorted_meshes_are_valid(kind):
    m = build_distorted(kind, 16, 16, 1000, 1000)
    assert m.areas.sum() == pytest.approx(1e6, rel=1e-10)
    assert m.domain_area == pytest.approx(1e6, rel=1e-10)
    assert np.all(m.triangle_areas > 0)
    twin = m.cell_edge_twin
    inner = twin >= 0
    assert np.allclose(m.cell_edge_normals[inner] + m.cell_edge_normals[twin[inner]], 0.0, atol=1e-12)
    assert np.all(m.edge_cells[m.boundary_edges, 1] == -1)


def test_kershaw_regularity_matches_reference():
    assert mesh_regularity(build_distorted("kershaw")) == pytest.approx(32.0274, abs=1e-4)


def test_hexahedral_regularity_matches_reference():
    assert mesh_regularity(build_distorted("hexahedral")) == pytest.approx(5.4772, abs=1e-4)


def test_kershaw_without_distortion_is_cartesian():
    m = build_distorted("kershaw", 8, 8, 1, 1, amplitude=0.0)
    assert mesh_regularity(m) == pytest.approx(2.0)
    assert np.allclose(m.areas, 1 / 64)


def test_nonconforming_has_hanging_nodes():
    m = build_distorted("nonconforming", 8, 8, 1, 1)
    assert m.cell_sizes.max() > 4
    assert m.areas.sum() == pytest.approx(1.0, rel=1e-12)


def test_subtriangulation_of_unit_square():
    st_ = subtriangulate(build_cartesian(1, 1, 1, 1))
    assert np.allclose(st_.areas, 0.25)


def test_subtriangulation_internal_normals():
    m = build_distorted("kershaw", 8, 8, 1, 1, amplitude=0.5)
    st_ = subtriangulate(m)
    r = m.centers[m.cell_of] - m.vertices[m.cell_nodes]
    rot = np.column_stack([r[:, 1], -r[:, 0]])
    assert np.allclose(st_.internal_lengths[:, None] * st_.internal_normals, rot, atol=1e-12)
    sums = np.bincount(st_.cell, weights=st_.areas)
    assert np.allclose(sums, m.areas, rtol=1e-12)
    assert np.all(st_.areas > 0)


def test_regularity_values():
    assert cell_regularity(build_cartesian(1, 1, 1, 1), 0) == pytest.approx(2.0)
    tri = PolygonalMesh([(0, 0), (1, 0), (0, 1)], [[0, 1, 2]])
    assert cell_regularity(tri, 0) == pytest.approx(4.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_regularity_is_scale_invariant(scale):
    m = build_distorted("kershaw", 6, 6, 1, 1, amplitude=0.5)
    m2 = PolygonalMesh(m.vertices * scale, [m.cell_vertices(k) for k in range(m.n_cells)])
    assert np.allclose(cell_regularity(m2), cell_regularity(m), rtol=1e-9)


def test_find_cell():
    m = build_cartesian(4, 4, 4, 4)
    assert m.find_cell((3.5, 0.5)) == 3
    with pytest.raises(MeshError):
        m.find_cell((5, 5))


def test_corners_detected():
    st_ = subtriangulate(build_cartesian(3, 3, 1, 1))
    corners = np.flatnonzero(st_.corner_points)
    pts = st_.points[corners]
    assert sorted(map(tuple, pts.tolist())) == [(0, 0), (0, 1), (1, 0), (1, 1)]
