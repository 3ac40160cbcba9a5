import math

import numpy as np
import pytest

from phodge.mesh import (
    MeshError,
    build_flat_torus,
    build_icosphere,
    compute_volumes,
    from_triangles,
    load_off,
    save_off,
)

TETRA_OFF = """OFF
4 4 6
0 0 0
1 0 0
0 1 0
0 0 1
3 0 2 1
3 0 1 3
3 0 3 2
3 1 2 3
"""


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_icosphere_counts(level):
    m = build_icosphere(level)
    assert m.counts == (10 * 4**level + 2, 30 * 4**level, 20 * 4**level)
    assert m.euler_characteristic == 2
    assert np.allclose(np.linalg.norm(m.vertices, axis=1), 1.0)


def test_icosphere_level_guard():
    with pytest.raises(ValueError, match="guard"):
        build_icosphere(8)
    with pytest.raises(ValueError):
        build_icosphere(-1)


def test_icosphere_refinement_factor():
    a, b = build_icosphere(1), build_icosphere(2)
    assert b.counts[2] == 4 * a.counts[2]
    assert b.counts[1] == 4 * a.counts[1]
    assert b.counts[0] - 2 == 4 * (a.counts[0] - 2)


@pytest.mark.parametrize("level", [0, 2, 4])
def test_dual_areas_partition_surface(level):
    m = build_icosphere(level)
    assert math.isclose(math.fsum(m.dual_volume[0]), m.total_volume(), rel_tol=1e-10)


def test_icosphere_well_centered():
    m = build_icosphere(2)
    assert m.well_centered
    assert min(d.min() for d in m.dual_volume) > 0


def test_torus_counts():
    m = build_flat_torus(3)
    assert m.counts == (9, 27, 18)
    assert m.euler_characteristic == 0


@pytest.mark.parametrize("N", [3, 8])
def test_torus_equilateral_ratios(N):
    m = build_flat_torus(N)
    assert m.well_centered
    np.testing.assert_allclose(m.dual_ratio(1), 1 / math.sqrt(3), rtol=1e-13)
    np.testing.assert_allclose(m.primal_volume[1], 1.0, rtol=1e-13)


def test_torus_area():
    m = build_flat_torus(16)
    assert math.isclose(m.total_volume(), 16**2 * math.sqrt(3) / 2, rel_tol=1e-12)
    assert math.isclose(math.fsum(m.dual_volume[0]), m.total_volume(), rel_tol=1e-10)


def test_torus_period_rescales():
    m = build_flat_torus(8, period=1.0)
    np.testing.assert_allclose(m.primal_volume[1], 1 / 8, rtol=1e-13)
    assert math.isclose(m.total_volume(), math.sqrt(3) / 2, rel_tol=1e-12)


def test_torus_guard():
    with pytest.raises(ValueError):
        build_flat_torus(2)


def test_unit_triangle_volumes():
    # regular tetrahedron with unit edges: every face is a unit equilateral triangle
    s3 = math.sqrt(3)
    verts = [[0, 0, 0], [1, 0, 0], [0.5, s3 / 2, 0], [0.5, s3 / 6, math.sqrt(2 / 3)]]
    m = from_triangles(verts, [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    np.testing.assert_allclose(m.primal_volume[2], s3 / 4, rtol=1e-14)
    np.testing.assert_allclose(m.primal_volume[1], 1.0, rtol=1e-14)
    # circumcenter = centroid, at distance 1/(2 sqrt 3) from each edge
    np.testing.assert_allclose(m.dual_volume[1], 2 / (2 * s3), rtol=1e-13)


def test_boundary_of_boundary_zero():
    for m in (build_icosphere(2), build_flat_torus(5)):
        b1, b2 = m.boundary_matrix(1), m.boundary_matrix(2)
        assert (b1 @ b2).count_nonzero() == 0
        assert np.all(np.asarray(b1.sum(axis=0)).ravel() == 0)
        assert set(np.unique(b2.data)) <= {-1.0, 1.0}
        assert np.all(np.diff(b2.tocsc().indptr) == 3)


def test_boundary_matrix_range(ico1):
    with pytest.raises(ValueError):
        ico1.boundary_matrix(0)
    with pytest.raises(ValueError):
        ico1.boundary_matrix(3)


def test_load_tetrahedron(tmp_path):
    path = tmp_path / "tet.off"
    path.write_text(TETRA_OFF)
    m = load_off(path)
    assert m.counts == (4, 6, 4)
    assert m.euler_characteristic == 2
    assert (m.boundary_matrix(1) @ m.boundary_matrix(2)).count_nonzero() == 0


def test_load_rejects_boundary_edge(tmp_path):
    text = TETRA_OFF.replace("4 4 6", "4 3 6").rsplit("3 1 2 3", 1)[0]
    path = tmp_path / "open.off"
    path.write_text(text)
    with pytest.raises(MeshError, match="non-closed"):
        load_off(path)


def test_load_rejects_nonmanifold(tmp_path):
    # three triangles sharing the edge (0, 1), closed up by extra faces below
    faces = [[0, 1, 2], [1, 0, 3], [0, 1, 4]]
    with pytest.raises(MeshError):
        from_triangles(np.random.default_rng(0).standard_normal((5, 3)), faces)
    text = "OFF\n5 3 0\n" + "\n".join("0 0 0" for _ in range(5)) + "\n" + "\n".join(
        "3 " + " ".join(map(str, f)) for f in faces) + "\n"
    path = tmp_path / "bad.off"
    path.write_text(text)
    with pytest.raises(MeshError):
        load_off(path)


def test_load_parse_failure(tmp_path):
    path = tmp_path / "junk.off"
    path.write_text("PLY\n1 2 3\n")
    with pytest.raises(MeshError, match="header"):
        load_off(path)
    path.write_text("OFF\n4 4 6\n0 0 0\n")
    with pytest.raises(MeshError):
        load_off(path)


def test_non_orientable_rejected():
    # minimal 6-vertex real projective plane
    faces = [[0, 1, 3], [0, 3, 4], [0, 4, 2], [0, 2, 5], [0, 5, 1],
             [1, 2, 3], [2, 3, 5], [3, 4, 5], [4, 1, 5], [1, 2, 4]]
    verts = np.random.default_rng(1).standard_normal((6, 3))
    with pytest.raises(MeshError, match="non-orientable"):
        from_triangles(verts, faces)


@pytest.mark.parametrize("build", [lambda: build_icosphere(2), lambda: build_flat_torus(6, period=1.0)])
def test_off_round_trip(tmp_path, build):
    m = build()
    path = tmp_path / "mesh.off"
    save_off(m, path)
    r = load_off(path)
    assert r.fingerprint() == m.fingerprint()
    for k in (1, 2):
        assert (r.boundary_matrix(k) != m.boundary_matrix(k)).nnz == 0
    np.testing.assert_array_equal(r.dual_volume[1], m.dual_volume[1])


def test_orientation_consistent(ico2):
    # outward normals everywhere: oriented faces agree with position vectors
    top = ico2.simplices[2]
    c = ico2.corners
    normal = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]) * ico2.orientation[:, None]
    signs = np.sign(np.einsum("ij,ij->i", normal, c.mean(axis=1)))
    assert np.all(signs == signs[0])
    assert top.shape[1] == 3


def test_flagged_mesh_not_rejected():
    # flat triangular bipyramid: equator edges see two ~120 degree angles
    ang = 2 * np.pi * np.arange(3) / 3
    verts = np.c_[np.cos(ang), np.sin(ang), np.zeros(3)].tolist() + [[0, 0, 0.1], [0, 0, -0.1]]
    faces = [[0, 1, 3], [1, 2, 3], [2, 0, 3], [1, 0, 4], [2, 1, 4], [0, 2, 4]]
    m = from_triangles(verts, faces)
    assert not m.well_centered
    assert m.dual_volume[1].min() <= 0


def test_degenerate_triangle_rejected():
    verts = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0]]
    faces = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]
    with pytest.raises(MeshError, match="degenerate"):
        from_triangles(verts, faces)


def test_scaled_mesh_volumes(ico1):
    s = ico1.scaled(2.0)
    np.testing.assert_array_equal(s.primal_volume[2], 4 * ico1.primal_volume[2])
    np.testing.assert_array_equal(s.dual_volume[0], 4 * ico1.dual_volume[0])
    assert compute_volumes(s).well_centered
