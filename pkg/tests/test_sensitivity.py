"""Adjoint gradients against finite differences and structural identities."""

import numpy as np
import pytest
from scipy.sparse.linalg import splu
from treegen import random_design

from mmtopo import fem
from mmtopo import materials as mat
from mmtopo import mesh as msh
from mmtopo import polytope as pt
from mmtopo import sensitivity as sens
from mmtopo import tree as itree
from mmtopo.errors import InvalidParameters


def small_mesh(n=50):
    return msh.generate_sector_mesh(target_element_count=n)


def tiled(mesh, fill):
    n = mesh.design_elements.size
    return {l: np.tile(np.asarray(v, dtype=float), (n, 1))
            for l, v in fill.items()}


def flat_linear_tree():
    # one polygon node blending 12 magnets and both conductors: every
    # material property is constant, so the fem problem stays linear
    entries = [mat.pm_model(30.0 * k) for k in range(12)]
    entries += [mat.conductor_model(+1), mat.conductor_model(-1)]
    spec = {(): {"polytope": pt.regular_polygon(14)}}
    for i, m in enumerate(entries):
        spec[(i + 1,)] = {"material": m}
    return itree.build_tree(spec)


def harmonic_current_tree():
    # currents follow cos(2 theta) around the polygon, whose first moment
    # against the vertex directions vanishes: the centroid is stationary
    spec = {(): {"polytope": pt.regular_polygon(12)}}
    for k in range(12):
        th = 2.0 * np.pi * k / 12.0
        spec[(k + 1,)] = {"material": mat.ConstantMaterial(
            f"h{k}", current_density=1e7 * np.cos(2.0 * th))}
    return itree.build_tree(spec)


# ---------------------------------------------------------------------------
# objective


def test_objective_limits():
    assert sens.objective(3.0, -2.0, 1.0) == 3.0
    assert sens.objective(3.0, -2.0, -1.0) == 2.0
    assert sens.objective(3.0, -2.0, 0.0) == 2.5


def test_objective_difference_convention():
    # alternate sign variant: the plus-case weight is negated
    assert sens.objective(3.0, -2.0, 1.0, convention="difference") == -3.0
    assert sens.objective(3.0, -2.0, 0.0, convention="difference") == -0.5


def test_objective_rejects_bad_gamma_and_convention():
    with pytest.raises(InvalidParameters):
        sens.case_weights(1.5)
    with pytest.raises(InvalidParameters):
        sens.case_weights(np.nan)
    with pytest.raises(InvalidParameters):
        sens.case_weights(0.5, convention="product")


# ---------------------------------------------------------------------------
# adjoint solve


def test_adjoint_zero_rhs_gives_zero():
    mesh = small_mesh(100)
    tree = itree.default_rotor_tree()
    rho = tiled(mesh, itree.centroid_design(tree))
    state = fem.solve_newton(mesh, tree, rho, +1.0)
    red = fem.reduction(mesh, "antiperiodic")
    lam = sens.solve_adjoint(mesh, tree, rho, state,
                             rhs=np.zeros(red.n_free))
    np.testing.assert_array_equal(lam, 0.0)


def test_adjoint_equals_forward_probe_solve_when_linear():
    mesh = small_mesh(200)
    tree = itree.default_rotor_tree()
    fill = itree.centroid_design(tree)
    fill[()] = tree.nodes[()].polytope.vertices[2]  # no steel: linear
    rho = tiled(mesh, fill)
    state = fem.solve_newton(mesh, tree, rho, +1.0)
    lam = sens.solve_adjoint(mesh, tree, rho, state)

    red = fem.reduction(mesh, "antiperiodic")
    g = sens.flux_extraction_vector(mesh)
    _, k_red = fem.assemble(mesh, tree, rho, state.a, +1.0)
    forward = splu(k_red).solve(g)
    np.testing.assert_allclose(lam[red.free_nodes], forward, rtol=1e-10)


def test_adjoint_predicts_flux_response_to_load_scaling():
    # scale the conductor currents by s: dphi/ds = load_sign * lambda . f
    mesh = small_mesh(200)

    def tree_for(scale):
        entries = ([mat.pm_model(30.0 * k) for k in range(12)]
                   + [mat.conductor_model(+1, current=scale * 1e7),
                      mat.conductor_model(-1, current=scale * 1e7),
                      mat.steel_model(), mat.air_model()])
        return itree.default_rotor_tree(mat.MaterialCatalogue(entries))

    tree = tree_for(1.0)
    fill = itree.centroid_design(tree)
    fill[(3,)] = np.array([0.7])
    fill[(3, 2)] = np.array([0.2])
    rho = tiled(mesh, fill)
    state = fem.solve_newton(mesh, tree, rho, +1.0, tol=1e-12)
    assert state.newton_iterations > 1  # steel is active
    lam = sens.solve_adjoint(mesh, tree, rho, state)
    red = fem.reduction(mesh, "antiperiodic")
    f = fem.load_vector(mesh, tree, rho)
    predicted = state.load_sign * lam[red.free_nodes] @ f

    h = 1e-5
    phis = []
    for s in (1.0 + h, 1.0 - h):
        st = fem.solve_newton(mesh, tree_for(s), rho, +1.0, tol=1e-12)
        phis.append(fem.compute_flux(st, mesh))
    fd = (phis[0] - phis[1]) / (2.0 * h)
    assert abs(predicted - fd) <= 1e-6 * abs(fd)


# ---------------------------------------------------------------------------
# design gradients vs finite differences


def test_gradient_matches_fd_linear_materials():
    mesh = small_mesh(50)
    tree = flat_linear_tree()
    rng = np.random.default_rng(5)
    rho = random_design(tree, rng, n=mesh.design_elements.size, shrink=0.9)
    worst = sens.finite_difference_check(mesh, tree, rho, gamma=0.3)
    assert worst <= 1e-4, f"max relative FD mismatch {worst:.3e}"


def test_gradient_matches_fd_with_steel():
    mesh = small_mesh(50)
    tree = itree.default_rotor_tree()
    rng = np.random.default_rng(6)
    rho = random_design(tree, rng, n=mesh.design_elements.size, shrink=0.9)
    worst = sens.finite_difference_check(mesh, tree, rho, gamma=-0.4,
                                         sample=60, seed=1)
    assert worst <= 1e-3, f"max relative FD mismatch {worst:.3e}"


def test_gradient_is_linear_in_gamma():
    mesh = small_mesh(120)
    tree = itree.default_rotor_tree()
    rng = np.random.default_rng(7)
    rho = random_design(tree, rng, n=mesh.design_elements.size, shrink=0.8)
    sp, sm, _, _ = fem.solve_both_cases(mesh, tree, rho)
    gamma = 0.37
    full = sens.design_gradient(mesh, tree, rho, sp, sm, gamma)

    lam_p = sens.solve_adjoint(mesh, tree, rho, sp)
    lam_m = sens.solve_adjoint(mesh, tree, rho, sm)
    g_p = sens.case_gradient(mesh, tree, rho, sp, lam_p)
    g_m = sens.case_gradient(mesh, tree, rho, sm, lam_m)
    w_p, w_m = sens.case_weights(gamma)
    for label in full:
        np.testing.assert_array_equal(
            full[label], w_p * g_p[label] + w_m * g_m[label])


def test_gradient_field_covers_design_elements():
    mesh = small_mesh(150)
    tree = itree.default_rotor_tree()
    rng = np.random.default_rng(8)
    rho = random_design(tree, rng, n=mesh.design_elements.size)
    sp, sm, _, _ = fem.solve_both_cases(mesh, tree, rho)
    grad = sens.design_gradient(mesh, tree, rho, sp, sm, 0.0)
    assert set(grad) == set(tree.internal_labels)
    for label, g in grad.items():
        assert g.shape == (mesh.design_elements.size, tree.dims[label])
        assert np.all(np.isfinite(g))


def test_gradient_vanishes_at_symmetric_stationary_point():
    mesh = small_mesh(100)
    tree = harmonic_current_tree()
    rho_c = tiled(mesh, {(): [0.0, 0.0]})
    sp, sm, _, _ = fem.solve_both_cases(mesh, tree, rho_c)
    g_center = sens.design_gradient(mesh, tree, rho_c, sp, sm, 1.0)

    rho_off = tiled(mesh, {(): [0.3, 0.2]})
    sp, sm, _, _ = fem.solve_both_cases(mesh, tree, rho_off)
    g_off = sens.design_gradient(mesh, tree, rho_off, sp, sm, 1.0)

    scale = sens.gradient_max_norm(g_off)
    assert scale > 0.0
    assert sens.gradient_max_norm(g_center) <= 1e-8 * scale
