import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutglue.meshes import (LEFT, RIGHT, Mesh, MeshError, build_grid_mesh,
                            build_interval_mesh, cut_along_interface,
                            lambda_one)


def test_interval_mesh_flat_unit():
    mesh = build_interval_mesh(3, 1.0)
    assert mesh.n_nodes == 5
    assert list(mesh.boundary) == [0, 4]
    assert list(mesh.interior) == [1, 2, 3]
    np.testing.assert_allclose(mesh.edge_weights, 1.0)
    np.testing.assert_allclose(mesh.node_volumes, 1.0)
    np.testing.assert_allclose(mesh.edge_lengths, 1.0)


def test_interval_mesh_scaling():
    # dim 1: conductance h^(n-2) = 1/h, volume h^n = h
    mesh = build_interval_mesh(3, 0.5)
    np.testing.assert_allclose(mesh.edge_weights, 2.0)
    np.testing.assert_allclose(mesh.node_volumes, 0.5)
    np.testing.assert_allclose(mesh.edge_lengths, 0.5)


def test_interval_mesh_profile():
    mesh = build_interval_mesh(2, 1.0, metric_profile=lambda x: 1.0 + x[0])
    # node positions 0,1,2,3; midpoints 0.5,1.5,2.5
    np.testing.assert_allclose(mesh.edge_weights, [1.5, 2.5, 3.5])
    np.testing.assert_allclose(mesh.node_volumes, [1.0, 2.0, 3.0, 4.0])


def test_grid_mesh_counts():
    mesh = build_grid_mesh(5, 5, 1.0)
    assert mesh.n_nodes == 25
    assert mesh.boundary.size == 16
    assert mesh.interior.size == 9
    assert mesh.edges.shape[0] == 2 * 5 * 4
    np.testing.assert_allclose(mesh.edge_weights, 1.0)  # dim 2: h^0


def test_mesh_validation_errors():
    mesh = build_interval_mesh(3, 1.0)
    with pytest.raises(MeshError):
        Mesh(positions=mesh.positions, edges=mesh.edges,
             edge_weights=-mesh.edge_weights, edge_lengths=mesh.edge_lengths,
             node_volumes=mesh.node_volumes, boundary=mesh.boundary,
             dim=1, spacing=1.0)
    with pytest.raises(MeshError):
        build_interval_mesh(0, 1.0)
    with pytest.raises(MeshError):
        build_interval_mesh(3, -1.0)
    with pytest.raises(MeshError):
        build_grid_mesh(1, 5, 1.0)


def test_geodesics_on_path():
    mesh = build_interval_mesh(5, 0.5)
    assert mesh.geodesic_distance(0, 6) == pytest.approx(3.0)
    assert mesh.geodesic_distance(2, 2) == 0.0
    bd = mesh.boundary_distance()
    assert bd[3] == pytest.approx(1.5)


def test_trim_to_deformed():
    mesh = build_interval_mesh(7, 1.0)
    assert list(mesh.trim_to_deformed(1.0)) == [1, 2, 3, 4, 5, 6, 7]
    assert list(mesh.trim_to_deformed(0.5)) == [2, 3, 4, 5, 6]
    assert list(mesh.trim_to_deformed(0.25)) == [4]
    assert mesh.trim_to_deformed(0.2).size == 0
    with pytest.raises(MeshError):
        mesh.trim_to_deformed(0.0)


def test_text_round_trip():
    mesh = build_grid_mesh(4, 3, 0.5, metric_profile=lambda x: 1.0 + 0.1 * x[0])
    back = Mesh.from_text(mesh.to_text())
    np.testing.assert_array_equal(back.positions, mesh.positions)
    np.testing.assert_array_equal(back.edges, mesh.edges)
    np.testing.assert_array_equal(back.edge_weights, mesh.edge_weights)
    np.testing.assert_array_equal(back.node_volumes, mesh.node_volumes)
    np.testing.assert_array_equal(back.boundary, mesh.boundary)
    assert back.dim == mesh.dim and back.spacing == mesh.spacing


def test_cut_five_node_path():
    mesh = build_interval_mesh(3, 1.0)
    cut = cut_along_interface(mesh, lambda n: n == 2)
    assert list(cut.interface) == [2]
    assert list(cut.left_nodes) == [1]
    assert list(cut.right_nodes) == [3]
    assert list(cut.left_boundary) == [0]
    assert list(cut.right_boundary) == [4]
    assert cut.shared_boundary.size == 0
    # no edge lies on the cut line on a path
    assert set(cut.edge_left_fraction.tolist()) == {0.0, 1.0}
    assert lambda_one(mesh, cut) == pytest.approx(0.5)


def test_cut_grid_shared_boundary_and_halved_edges():
    mesh = build_grid_mesh(5, 5, 1.0)
    cut = cut_along_interface(mesh, lambda n: mesh.positions[n][0] == 2.0)
    assert cut.interface.size == 3
    assert cut.left_nodes.size == 3 and cut.right_nodes.size == 3
    # boundary nodes straight above/below the interface column are shared
    shared = {int(n) for n in cut.shared_boundary}
    assert shared == {2, 22}
    halved = cut.edge_left_fraction == 0.5
    # the vertical edges along the cut column (interface-interface and
    # interface-shared) split evenly
    assert halved.sum() == 4
    for e in np.nonzero(halved)[0]:
        i, j = mesh.edges[e]
        assert mesh.positions[i][0] == 2.0 and mesh.positions[j][0] == 2.0
    frac_l = cut.edge_fraction(LEFT)
    frac_r = cut.edge_fraction(RIGHT)
    np.testing.assert_allclose(frac_l + frac_r, 1.0)


def test_cut_side_outer_boundary_includes_shared():
    mesh = build_grid_mesh(5, 5, 1.0)
    cut = cut_along_interface(mesh, lambda n: mesh.positions[n][0] == 2.0)
    left = set(map(int, cut.side_outer_boundary(LEFT)))
    right = set(map(int, cut.side_outer_boundary(RIGHT)))
    assert left & right == {2, 22}
    assert left | right == set(map(int, mesh.boundary))


def test_cut_not_a_separator():
    mesh = build_grid_mesh(5, 5, 1.0)
    with pytest.raises(MeshError, match="not a separator"):
        cut_along_interface(mesh, lambda n: n == 12)
    with pytest.raises(MeshError, match="not a separator"):
        cut_along_interface(mesh, lambda n: False)


def test_lambda_one_requires_boundary():
    mesh = build_interval_mesh(3, 1.0)
    cut = cut_along_interface(mesh, lambda n: n == 2)
    free = Mesh(positions=mesh.positions, edges=mesh.edges,
                edge_weights=mesh.edge_weights, edge_lengths=mesh.edge_lengths,
                node_volumes=mesh.node_volumes,
                boundary=np.array([], dtype=int), dim=1, spacing=1.0)
    with pytest.raises(MeshError, match="no boundary"):
        lambda_one(free, cut)


@settings(max_examples=25, deadline=None)
@given(nx=st.integers(3, 6), ny=st.integers(3, 6),
       amp=st.floats(0.0, 0.9), seed=st.integers(0, 10**6))
def test_geodesic_metric_properties(nx, ny, amp, seed):
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0, 3.0)
    mesh = build_grid_mesh(nx, ny, 1.0,
                           metric_profile=lambda x: 1.0 + amp * np.sin(x[0] + phase) ** 2)
    d = mesh.distance_matrix()
    np.testing.assert_allclose(d, d.T, atol=1e-12)
    assert np.all(np.diag(d) == 0.0)
    n = mesh.n_nodes
    for _ in range(10):
        i, j, k = rng.integers(0, n, size=3)
        assert d[i, j] <= d[i, k] + d[k, j] + 1e-9
