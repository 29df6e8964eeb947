"""Adjoint sensitivities of the dual-load-case flux objective.

The scalar objective blends the fluxes of the two supply cases,

    J(gamma) = w_plus * phi_plus + w_minus * phi_minus,
    w_plus = (gamma + 1) / 2,   w_minus = (gamma - 1) / 2,

and is MAXIMIZED: gamma = 1 rewards outward flux of the positive case,
gamma = -1 drives the negative case flux down, gamma = 0 targets the
antisymmetric pair. An alternate "difference" convention (the same
expression with the plus-case weight negated) is kept behind a switch for
comparison runs; it does not reproduce the reference optima.

dJ/drho follows from the implicit function theorem at a converged state
R(a, rho) = 0: solve K^T lambda = dphi/da once per case with the exact
tangent K (the converged Newton Jacobian), then contract lambda with the
explicit derivative dR/drho, which lives entirely in the material terms.
"""

import numpy as np
from scipy.sparse.linalg import splu

from . import fem
from . import tree as itree
from .errors import InvalidParameters, SingularSystem
from .materials import NU0

OBJECTIVE_CONVENTIONS = ("sum", "difference")


def case_weights(gamma, convention="sum"):
    gamma = float(gamma)
    if not np.isfinite(gamma) or abs(gamma) > 1.0:
        raise InvalidParameters(f"gamma must lie in [-1, 1], got {gamma}")
    if convention not in OBJECTIVE_CONVENTIONS:
        raise InvalidParameters(
            f"convention must be one of {OBJECTIVE_CONVENTIONS}, "
            f"got {convention!r}")
    w_plus = (gamma + 1.0) / 2.0
    w_minus = (gamma - 1.0) / 2.0
    if convention == "difference":
        w_plus = -w_plus
    return w_plus, w_minus


def objective(phi_plus, phi_minus, gamma, convention="sum"):
    w_plus, w_minus = case_weights(gamma, convention)
    return w_plus * float(phi_plus) + w_minus * float(phi_minus)


def flux_extraction_vector(mesh, radial_bc="antiperiodic"):
    """Reduced dphi/da for phi = a(slave probe) - a(master probe)."""
    g_full = np.zeros(mesh.n_nodes)
    g_full[mesh.probe_slave] += 1.0
    g_full[mesh.probe_master] -= 1.0
    return fem.reduction(mesh, radial_bc).restrict_vec(g_full)


def solve_adjoint(mesh, tree, rho, state, rhs=None):
    """Full nodal adjoint vector for one converged load case.

    Solves K^T lambda = rhs on the reduced dofs (rhs defaults to the flux
    extraction vector) and expands through the constraint map, so the
    result pairs directly with unreduced per-element residual derivatives.
    """
    red = fem.reduction(mesh, state.radial_bc)
    if rhs is None:
        rhs = flux_extraction_vector(mesh, state.radial_bc)
    _, k_red = fem.assemble(mesh, tree, rho, state.a, state.load_sign,
                            state.radial_bc)
    try:
        lam_red = splu(k_red).solve(rhs, trans="T")
    except RuntimeError as e:
        raise SingularSystem(f"adjoint factorization failed: {e}") from e
    if not np.all(np.isfinite(lam_red)):
        raise SingularSystem("non-finite adjoint solution")
    return red.expand(lam_red)


def case_gradient(mesh, tree, rho, state, lam):
    """dphi_case/drho_l per design element, via -lambda^T dR/drho_l.

    R_i = nu0/2 * (B - Jp) . (c_i, -b_i) - load_sign * J * A/3 depends on
    rho only through Jp and J, so the contraction needs three lambda
    moments per element: sum(lam c), sum(lam b) and sum(lam) * A/3.
    """
    bco, cco, area = mesh.p1_coefficients()
    de = mesh.design_elements
    lam_e = lam[mesh.triangles[de]]
    px = (lam_e * cco[de]).sum(axis=1)
    py = (lam_e * bco[de]).sum(axis=1)
    s = lam_e.sum(axis=1) * area[de] / 3.0
    grads = itree.eval_drho(tree, rho, state.b[de])
    out = {}
    for label, g in grads.items():
        dr = 0.5 * NU0 * (-g.d_polarization[..., 0] * px[:, None]
                          + g.d_polarization[..., 1] * py[:, None])
        dr -= state.load_sign * g.d_current_density * s[:, None]
        out[label] = -dr
    return out


def design_gradient(mesh, tree, rho, state_plus, state_minus, gamma,
                    convention="sum"):
    """dJ/drho_l over design elements for the blended objective."""
    w_plus, w_minus = case_weights(gamma, convention)
    lam_p = solve_adjoint(mesh, tree, rho, state_plus)
    lam_m = solve_adjoint(mesh, tree, rho, state_minus)
    g_plus = case_gradient(mesh, tree, rho, state_plus, lam_p)
    g_minus = case_gradient(mesh, tree, rho, state_minus, lam_m)
    return {label: w_plus * g_plus[label] + w_minus * g_minus[label]
            for label in g_plus}


def gradient_max_norm(grad):
    return max(np.abs(g).max() for g in grad.values())


def finite_difference_check(mesh, tree, rho, gamma, step=1e-6,
                            convention="sum", radial_bc="antiperiodic",
                            newton_tol=1e-11, sample=None, seed=0):
    """Max |adjoint - central FD| over gradient components, relative to the
    gradient's max norm. `sample` caps the number of probed components."""

    def solve_objective(rho_):
        _, _, phi_p, phi_m = fem.solve_both_cases(
            mesh, tree, rho_, tol=newton_tol, radial_bc=radial_bc)
        return objective(phi_p, phi_m, gamma, convention)

    state_p, state_m, _, _ = fem.solve_both_cases(
        mesh, tree, rho, tol=newton_tol, radial_bc=radial_bc)
    grad = design_gradient(mesh, tree, rho, state_p, state_m, gamma,
                           convention)
    scale = gradient_max_norm(grad)
    components = [(label, e, d)
                  for label in sorted(grad)
                  for e in range(grad[label].shape[0])
                  for d in range(grad[label].shape[1])]
    if sample is not None and sample < len(components):
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(components), size=sample, replace=False)
        components = [components[i] for i in picks]

    worst = 0.0
    for label, e, d in components:
        perturbed = {l: v.copy() for l, v in rho.items()}
        perturbed[label][e, d] += step
        j_hi = solve_objective(perturbed)
        perturbed[label][e, d] -= 2.0 * step
        j_lo = solve_objective(perturbed)
        fd = (j_hi - j_lo) / (2.0 * step)
        worst = max(worst, abs(fd - grad[label][e, d]) / scale)
    return worst
