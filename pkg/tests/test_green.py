import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutglue.green import (GreenError, cross_form, dtn, green_bundle,
                           interface_green, quadratic_form_S0, side_bundle,
                           verify_dtn_difference, verify_green_gluing,
                           verify_quadratic_decomposition)
from cutglue.meshes import (LEFT, RIGHT, build_grid_mesh, build_interval_mesh,
                            cut_along_interface)
from cutglue.operators import OperatorSpec

M0 = OperatorSpec(mass_squared=0.0)


def path5():
    mesh = build_interval_mesh(3, 1.0)
    cut = cut_along_interface(mesh, lambda n: n == 2)
    return mesh, cut


def test_green_matrix_hand_value():
    mesh, _ = path5()
    bundle = green_bundle(mesh, M0)
    expected = 0.25 * np.array([[3.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 3.0]])
    np.testing.assert_allclose(bundle.green, expected, atol=1e-14)


def test_harmonic_extension_linear_profile():
    mesh, _ = path5()
    bundle = green_bundle(mesh, M0)
    field = bundle.extend(np.array([1.0, 0.0]))
    np.testing.assert_allclose(field, [1.0, 0.75, 0.5, 0.25, 0.0], atol=1e-14)


def test_constant_extension():
    mesh = build_grid_mesh(5, 5, 1.0)
    bundle = green_bundle(mesh, M0)
    field = bundle.extend(np.ones(mesh.boundary.size))
    np.testing.assert_allclose(field, 1.0, atol=1e-13)


def test_poisson_maximum_principle():
    mesh = build_grid_mesh(5, 5, 1.0)
    bundle = green_bundle(mesh, M0)
    assert bundle.poisson.min() >= -1e-14
    np.testing.assert_allclose(bundle.poisson.sum(axis=1), 1.0, atol=1e-13)


def test_side_responses_five_node_path():
    mesh, cut = path5()
    left = side_bundle(mesh, M0, cut, LEFT)
    right = side_bundle(mesh, M0, cut, RIGHT)
    np.testing.assert_allclose(left.dtn_sigma, [[0.5]], atol=1e-14)
    np.testing.assert_allclose(right.dtn_sigma, [[0.5]], atol=1e-14)
    g_sigma = interface_green(left, right)
    np.testing.assert_allclose(g_sigma, [[1.0]], atol=1e-14)
    # G restricted to the interface equals the whole-inverse entry G(2,2) = 1
    bundle = green_bundle(mesh, M0)
    assert bundle.green[1, 1] == pytest.approx(1.0)


def test_dtn_dispatcher():
    mesh, cut = path5()
    np.testing.assert_allclose(dtn(mesh, M0, cut, LEFT, "sigma"), [[0.5]])
    np.testing.assert_allclose(dtn(mesh, M0, cut, "whole", "sigma"), [[1.0]])
    whole = dtn(mesh, M0, None, "whole", "outer")
    assert whole.shape == (2, 2)
    with pytest.raises(GreenError):
        dtn(mesh, M0, None, "whole", "sigma")
    with pytest.raises(GreenError):
        dtn(mesh, M0, None, LEFT, "sigma")


def test_empty_side_interior_degenerates_to_diagonal_share():
    # cut right next to the boundary: the left side keeps no interior nodes
    mesh = build_interval_mesh(3, 1.0)
    cut = cut_along_interface(mesh, lambda n: n == 1)
    left = side_bundle(mesh, M0, cut, LEFT)
    assert left.interior.size == 0
    # boundary node 0 sits on the cut line; the edge (0,1) splits evenly, so
    # the left response is the diagonal share alone
    np.testing.assert_allclose(left.dtn_sigma, [[0.5]], atol=1e-14)
    right = side_bundle(mesh, M0, cut, RIGHT)
    bundle = green_bundle(mesh, M0)
    # the sum of responses still inverts the interface Green entry G(1,1)=3/4
    k = left.dtn_sigma + right.dtn_sigma
    np.testing.assert_allclose(k, [[1.0 / bundle.green[0, 0]]], atol=1e-13)


def test_quadratic_form_hand_value():
    mesh, _ = path5()
    bundle = green_bundle(mesh, M0)
    field = bundle.extend(np.array([1.0, 0.0]))
    assert quadratic_form_S0(mesh, M0, field) == pytest.approx(0.125, abs=1e-14)
    assert quadratic_form_S0(mesh, M0, np.zeros(5)) == 0.0


def test_quadratic_form_matches_schur_energy():
    mesh = build_grid_mesh(5, 5, 1.0)
    spec = OperatorSpec(mass_squared=0.3)
    bundle = green_bundle(mesh, spec)
    rng = np.random.default_rng(7)
    for _ in range(20):
        eta = rng.standard_normal(mesh.boundary.size)
        s_edges = quadratic_form_S0(mesh, spec, bundle.extend(eta))
        s_schur = 0.5 * eta @ bundle.dtn @ eta
        assert s_edges == pytest.approx(s_schur, abs=1e-12)


def test_cross_form_zero_and_overlap():
    mesh, cut = path5()
    bundle = green_bundle(mesh, M0)
    a, b = np.array([0]), np.array([4])
    assert cross_form(bundle, a, np.array([1.0]), b, np.array([0.0])) == 0.0
    with pytest.raises(GreenError, match="overlapping"):
        cross_form(bundle, a, np.array([1.0]), a, np.array([1.0]))


@settings(max_examples=30, deadline=None)
@given(ea=st.floats(-3, 3), eb=st.floats(-3, 3))
def test_cross_form_symmetry(ea, eb):
    mesh = build_grid_mesh(5, 4, 1.0)
    bundle = green_bundle(mesh, OperatorSpec(0.2))
    ids = list(map(int, mesh.boundary))
    a, b = np.array(ids[:3]), np.array(ids[3:6])
    va = np.array([ea, -ea, 2 * ea])
    vb = np.array([eb, eb, -eb])
    s_ab = cross_form(bundle, a, va, b, vb)
    s_ba = cross_form(bundle, b, vb, a, va)
    assert s_ab == pytest.approx(s_ba, abs=1e-12)


def test_cross_form_closes_the_decomposition():
    # the cross term is fixed by requiring S0[a+b] = S0[a] + S0[b] - S_{l,r}
    mesh, cut = path5()
    bundle = green_bundle(mesh, M0)
    a, b = np.array([0]), np.array([4])
    va, vb = np.array([1.0]), np.array([1.0])
    full = np.array([1.0, 1.0])
    s_sum = quadratic_form_S0(mesh, M0, bundle.extend(full))
    s_a = quadratic_form_S0(mesh, M0, bundle.extend(np.array([1.0, 0.0])))
    s_b = quadratic_form_S0(mesh, M0, bundle.extend(np.array([0.0, 1.0])))
    assert s_sum == pytest.approx(s_a + s_b - cross_form(bundle, a, va, b, vb),
                                  abs=1e-14)


def test_quadratic_decomposition_reports():
    mesh, cut = path5()
    rep = verify_quadratic_decomposition(mesh, M0, cut, trials=100)
    assert rep.passed and rep.max_residual <= 1e-12
    grid = build_grid_mesh(5, 5, 1.0)
    gcut = cut_along_interface(grid, lambda n: grid.positions[n][0] == 2.0)
    rep = verify_quadratic_decomposition(grid, OperatorSpec(0.3), gcut, trials=100)
    assert rep.passed and rep.max_residual <= 1e-12


def test_green_gluing_hand_values():
    mesh, cut = path5()
    bundle = green_bundle(mesh, M0)
    left = side_bundle(mesh, M0, cut, LEFT)
    right = side_bundle(mesh, M0, cut, RIGHT)
    g_sigma = interface_green(left, right)
    # cross side: G(1,3) = P_l(1,sigma) G_sigma P_r(3,sigma) = 0.5 * 1 * 0.5
    glued = left.poisson_sigma @ g_sigma @ right.poisson_sigma.T
    assert glued[0, 0] == pytest.approx(0.25)
    assert bundle.green[0, 2] == pytest.approx(0.25)
    # same side: G(1,1) = G_l(1,1) + 0.5 * 1 * 0.5 = 0.5 + 0.25
    same = left.green + left.poisson_sigma @ g_sigma @ left.poisson_sigma.T
    assert same[0, 0] == pytest.approx(0.75)
    assert bundle.green[0, 0] == pytest.approx(0.75)


def test_green_gluing_reports():
    for mesh, sel, spec in [
        (build_interval_mesh(7, 1.0), lambda n: n == 4, M0),
        (build_grid_mesh(5, 5, 1.0), None, OperatorSpec(0.1)),
    ]:
        if sel is None:
            sel = lambda n, m=mesh: m.positions[n][0] == 2.0
        cut = cut_along_interface(mesh, sel)
        rep = verify_green_gluing(mesh, spec, cut)
        assert rep.passed and rep.max_residual <= 1e-10


def test_dtn_difference_bounded_under_refinement():
    norms = []
    for n_interior in (3, 7, 15):  # spacing halves, same geometry [0, 4]
        spacing = 4.0 / (n_interior + 1)
        mesh = build_interval_mesh(n_interior, spacing)
        mid = 2.0
        cut = cut_along_interface(
            mesh, lambda n, m=mesh: abs(m.positions[n][0] - mid) < 1e-9)
        rep = verify_dtn_difference(mesh, M0, cut)
        assert rep.passed
        norms.append(float(rep.checks[0].details["max_entry"]))
    assert all(np.isfinite(v) for v in norms)
    assert max(norms) <= 2.0 * max(norms[0], 1e-12)  # no blow-up trend
