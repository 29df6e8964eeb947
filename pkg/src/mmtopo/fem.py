"""Nonlinear 2D magnetostatics for the out-of-plane vector potential.

First-order triangles carry element-wise constant B = curl(a) and
element-wise material properties interpolated by the design tree. The weak
form per free node i is

    R_i = integral nu0*(B - Jp_tilde) . curl(w_i) - load_sign * J_tilde * w_i

with a = 0 on the inner and outer arcs and the two radial edges coupled by a
master-slave reduction: anti-periodic (slave = -master, the physical rotor
pole condition), periodic, or free ("neumann", which is exact for
axisymmetric verification problems).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import tree as itree
from .errors import InvalidParameters, NewtonDivergence, SingularSystem
from .kernels import p1_element_b, p1_element_system
from .materials import NU0

RADIAL_BCS = ("antiperiodic", "periodic", "neumann")


class Reduction:
    """Sparse map T from free dofs to full nodal values, a_full = T a_red."""

    def __init__(self, mesh, radial_bc):
        if radial_bc not in RADIAL_BCS:
            raise InvalidParameters(
                f"radial_bc must be one of {RADIAL_BCS}, got {radial_bc!r}")
        nn = mesh.n_nodes
        dirichlet = np.zeros(nn, dtype=bool)
        dirichlet[mesh.inner_arc] = True
        dirichlet[mesh.outer_arc] = True

        partner = np.full(nn, -1, dtype=np.int64)
        sign = np.zeros(nn)
        if radial_bc != "neumann":
            sigma = -1.0 if radial_bc == "antiperiodic" else 1.0
            for m, s in zip(mesh.master_edge, mesh.slave_edge):
                if not dirichlet[s]:
                    partner[s] = m
                    sign[s] = sigma

        free = ~dirichlet & (partner < 0)
        self.free_nodes = np.flatnonzero(free)
        self.n_free = self.free_nodes.size
        index = np.full(nn, -1, dtype=np.int64)
        index[self.free_nodes] = np.arange(self.n_free)

        rows = [self.free_nodes]
        cols = [np.arange(self.n_free)]
        vals = [np.ones(self.n_free)]
        slaves = np.flatnonzero(partner >= 0)
        if slaves.size:
            rows.append(slaves)
            cols.append(index[partner[slaves]])
            vals.append(sign[slaves])
        self.matrix = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nn, self.n_free))
        self.radial_bc = radial_bc

    def expand(self, a_red):
        return self.matrix @ a_red

    def restrict_vec(self, r_full):
        return self.matrix.T @ r_full

    def restrict_mat(self, k_full):
        return (self.matrix.T @ k_full @ self.matrix).tocsc()


def reduction(mesh, radial_bc="antiperiodic"):
    cache = getattr(mesh, "_reductions", None)
    if cache is None:
        cache = mesh._reductions = {}
    if radial_bc not in cache:
        cache[radial_bc] = Reduction(mesh, radial_bc)
    return cache[radial_bc]


@dataclass
class FemState:
    a: np.ndarray               # full nodal vector potential (Wb/m)
    b: np.ndarray               # per-element flux density (T)
    load_sign: float
    newton_iterations: int
    residual_norm: float
    radial_bc: str = "antiperiodic"


def _coo_pattern(mesh):
    pat = getattr(mesh, "_coo_pattern", None)
    if pat is None:
        tri = mesh.triangles
        rows = np.repeat(tri, 3, axis=1).ravel()
        cols = np.tile(tri, (1, 3)).ravel()
        pat = mesh._coo_pattern = (rows, cols)
    return pat


def element_fields(mesh, tree, rho, bfield, with_db=False):
    """(Jp, J, dJp/dB) per element; airgap elements are air."""
    ne = mesh.n_elements
    jp = np.zeros((ne, 2))
    jz = np.zeros(ne)
    djp = np.zeros((ne, 2, 2)) if with_db else None
    de = mesh.design_elements
    if with_db:
        val = itree.eval_dB(tree, rho, bfield[de])
        djp[de] = val.d_polarization_dB
    else:
        val = itree.eval(tree, rho, bfield[de])
    jp[de] = val.polarization
    jz[de] = val.current_density
    return jp, jz, djp


def assemble_full(mesh, tree, rho, a, load_sign):
    """Unreduced residual and Jacobian over all nodes (no constraints)."""
    bco, cco, area = mesh.p1_coefficients()
    a = np.asarray(a, dtype=np.float64)
    bfield = p1_element_b(a[mesh.triangles], bco, cco, 0.5 / area)
    jp, jz, djp = element_fields(mesh, tree, rho, bfield, with_db=True)
    relem, kelem = p1_element_system(bco, cco, area, bfield, jp, djp, jz,
                                     NU0, load_sign)
    r_full = np.zeros(mesh.n_nodes)
    np.add.at(r_full, mesh.triangles, relem)
    rows, cols = _coo_pattern(mesh)
    k_full = sp.csr_matrix((kelem.ravel(), (rows, cols)),
                           shape=(mesh.n_nodes, mesh.n_nodes))
    return r_full, k_full, bfield


def assemble(mesh, tree, rho, a, load_sign, radial_bc="antiperiodic"):
    """Constraint-reduced residual vector and Jacobian matrix at state a."""
    r_full, k_full, _ = assemble_full(mesh, tree, rho, a, load_sign)
    red = reduction(mesh, radial_bc)
    return red.restrict_vec(r_full), red.restrict_mat(k_full)


def load_vector(mesh, tree, rho, radial_bc="antiperiodic"):
    """Reduced current load f_i = integral J_tilde w_i (without load_sign)."""
    _, _, area = mesh.p1_coefficients()
    _, jz, _ = element_fields(mesh, tree, rho, np.zeros((mesh.n_elements, 2)))
    f_full = np.zeros(mesh.n_nodes)
    np.add.at(f_full, mesh.triangles, np.repeat(jz * area / 3.0, 3).reshape(-1, 3))
    return reduction(mesh, radial_bc).restrict_vec(f_full)


def solve_newton(mesh, tree, rho, load_sign, tol=1e-8, max_iter=50,
                 radial_bc="antiperiodic"):
    """Damped Newton with halving line search on the residual norm."""
    red = reduction(mesh, radial_bc)
    a_red = np.zeros(red.n_free)

    def residual(a_red_):
        a_full_ = red.expand(a_red_)
        r_full, k_full, bfield_ = assemble_full(mesh, tree, rho, a_full_,
                                                load_sign)
        return (red.restrict_vec(r_full), red.restrict_mat(k_full),
                a_full_, bfield_)

    r_red, k_red, a_full, bfield = residual(a_red)
    norm0 = np.linalg.norm(r_red)
    target = max(tol * norm0, 1e-12)
    norm = norm0
    iterations = 0
    while norm > target:
        if iterations >= max_iter:
            raise NewtonDivergence(iterations, norm)
        try:
            lu = splu(k_red)
        except RuntimeError as e:
            raise SingularSystem(f"Jacobian factorization failed: {e}") from e
        delta = lu.solve(-r_red)
        if not np.all(np.isfinite(delta)):
            raise SingularSystem("non-finite Newton step")
        t = 1.0
        while True:
            trial = a_red + t * delta
            r_new, k_new, a_full_new, b_new = residual(trial)
            norm_new = np.linalg.norm(r_new)
            if norm_new < norm or t < 2.0**-20:
                break
            t *= 0.5
        a_red, r_red, k_red = trial, r_new, k_new
        a_full, bfield = a_full_new, b_new
        norm = norm_new
        iterations += 1
    return FemState(a=a_full, b=bfield, load_sign=float(load_sign),
                    newton_iterations=iterations, residual_norm=float(norm),
                    radial_bc=radial_bc)


def compute_flux(state, mesh):
    """Flux (Wb per meter of depth) crossing the rotor arc between probes."""
    return float(state.a[mesh.probe_slave] - state.a[mesh.probe_master])


def solve_both_cases(mesh, tree, rho, **kwargs):
    state_plus = solve_newton(mesh, tree, rho, +1.0, **kwargs)
    state_minus = solve_newton(mesh, tree, rho, -1.0, **kwargs)
    return (state_plus, state_minus,
            compute_flux(state_plus, mesh), compute_flux(state_minus, mesh))
