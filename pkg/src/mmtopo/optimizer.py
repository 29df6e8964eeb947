"""Projected gradient ascent over per-element design fields.

The raw field (one polytope point per design element per tree node) is
smoothed by a linear hat-kernel density filter before evaluation; the
chain rule for that smoothing is the exact transpose map. Steps move the
raw field along the filtered-then-transposed gradient, infinity-norm
normalized and capped by a move limit, then project every coordinate back
onto its polytope. No line search: the method trades monotonicity for a
bounded, scale-free update.
"""

import csv
from dataclasses import dataclass, field as dfield

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from . import fem
from . import sensitivity as sens
from . import tree as itree
from .errors import (InvalidParameters, NewtonDivergence, SolverFailure,
                     ZeroGradient)

TERMINATIONS = ("max_iter", "stagnation", "solver_failure")


@dataclass
class OptimizerConfig:
    gamma: float = 1.0
    max_iterations: int = 500
    stagnation_tol: float = 1e-4
    move_limit: float = 0.05
    filter_radius: float = None   # None: 2x mean design-element edge
    init: str = "centroid"        # "centroid" | "random"
    seed: int = 0
    convention: str = "sum"
    newton_tol: float = 1e-8
    newton_max_iter: int = 50
    radial_bc: str = "antiperiodic"
    checkpoint_every: int = 0

    def validate(self):
        sens.case_weights(self.gamma, self.convention)
        if self.max_iterations < 1:
            raise InvalidParameters("max_iterations must be >= 1")
        if self.stagnation_tol <= 0.0:
            raise InvalidParameters("stagnation_tol must be > 0")
        if self.move_limit <= 0.0:
            raise InvalidParameters("move_limit must be > 0")
        if self.filter_radius is not None and self.filter_radius < 0.0:
            raise InvalidParameters("filter_radius must be >= 0")
        if self.init not in ("centroid", "random"):
            raise InvalidParameters(f"unknown init mode {self.init!r}")

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        extra = set(d) - set(known)
        if extra:
            raise InvalidParameters(f"unknown optimizer options {sorted(extra)}")
        cfg = cls(**known)
        cfg.validate()
        return cfg


@dataclass
class DesignField:
    raw: dict                 # label -> (Nd, dim)
    filtered: dict            # label -> (Nd, dim), the evaluated field
    filter_radius: float
    centroids: np.ndarray     # (Nd, 2) design-element centroids
    areas: np.ndarray         # (Nd,)


@dataclass
class TraceRow:
    iteration: int
    objective: float
    phi_plus: float
    phi_minus: float
    step_norm: float
    newton_iters_plus: int
    newton_iters_minus: int


TRACE_COLUMNS = ("iteration", "objective", "phi_plus", "phi_minus",
                 "step_norm", "newton_iters_plus", "newton_iters_minus")


@dataclass
class RunResult:
    field: DesignField
    trace: list
    termination: str
    failure: SolverFailure = None

    @property
    def best_iteration(self):
        return max(self.trace, key=lambda row: row.objective).iteration

    @property
    def final(self):
        return self.trace[-1]


def mean_design_edge(mesh):
    pts = mesh.nodes[mesh.triangles[mesh.design_elements]]  # (Nd, 3, 2)
    lengths = [np.linalg.norm(pts[:, i] - pts[:, (i + 1) % 3], axis=1)
               for i in range(3)]
    return float(np.mean(lengths))


def filter_matrix(mesh, radius):
    """Row-normalized hat-kernel smoothing over design-element centroids."""
    cache = getattr(mesh, "_filter_cache", None)
    if cache is None:
        cache = mesh._filter_cache = {}
    key = float(radius)
    if key in cache:
        return cache[key]
    de = mesh.design_elements
    n = de.size
    if radius <= 0.0:
        w = sp.identity(n, format="csr")
    else:
        cen = mesh.centroids()[de]
        area = mesh.areas()[de]
        pairs = cKDTree(cen).query_pairs(radius, output_type="ndarray")
        d = np.linalg.norm(cen[pairs[:, 0]] - cen[pairs[:, 1]], axis=1)
        hat = 1.0 - d / radius
        rows = np.concatenate([np.arange(n), pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([np.arange(n), pairs[:, 1], pairs[:, 0]])
        vals = np.concatenate([area, hat * area[pairs[:, 1]],
                               hat * area[pairs[:, 0]]])
        w = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        w = sp.csr_matrix(w.multiply(1.0 / w.sum(axis=1)))
    cache[key] = w
    return w


def density_filter(raw, mesh, filter_radius):
    w = filter_matrix(mesh, filter_radius)
    return {label: w @ v for label, v in raw.items()}


def filter_adjoint(gradients, mesh, filter_radius):
    w = filter_matrix(mesh, filter_radius)
    return {label: w.T @ g for label, g in gradients.items()}


def make_field(tree, mesh, raw, filter_radius):
    filtered = density_filter(raw, mesh, filter_radius)
    for label in tree.internal_labels:
        poly = tree.nodes[label].polytope
        assert poly.contains(raw[label]), f"raw design left node {label}"
        assert poly.contains(filtered[label]), f"filtered design left {label}"
    de = mesh.design_elements
    return DesignField(raw=raw, filtered=filtered,
                       filter_radius=float(filter_radius),
                       centroids=mesh.centroids()[de], areas=mesh.areas()[de])


def initial_raw(tree, mesh, config):
    n = mesh.design_elements.size
    if config.init == "centroid":
        return itree.centroid_design(tree, n)
    rng = np.random.default_rng(config.seed)
    out = {}
    for label in tree.internal_labels:
        poly = tree.nodes[label].polytope
        w = rng.dirichlet(np.ones(poly.vertex_count), size=n)
        out[label] = w @ poly.vertices
    return out


def _flat(raw):
    return np.concatenate([raw[label].ravel() for label in sorted(raw)])


def step(tree, mesh, field, gradient, config):
    """Ascent step in raw space followed by per-node projection."""
    gnorm = sens.gradient_max_norm(gradient)
    if gnorm == 0.0:
        raise ZeroGradient("gradient is identically zero")
    moved = {label: field.raw[label] + config.move_limit * gradient[label] / gnorm
             for label in field.raw}
    projected = itree.project_design(tree, moved)
    return make_field(tree, mesh, projected, field.filter_radius)


def run(mesh, tree, config, trace_file=None, checkpoint=None):
    """Optimize the design field; returns the trace and termination reason.

    A Newton breakdown ends the run gracefully with termination
    "solver_failure" and the wrapped error on the result, so sweeps over
    gamma can record the failure and continue.
    """
    config.validate()
    radius = (config.filter_radius if config.filter_radius is not None
              else 2.0 * mean_design_edge(mesh))
    field = make_field(tree, mesh, initial_raw(tree, mesh, config), radius)

    trace = []
    termination = "max_iter"
    failure = None
    writer = None
    handle = None
    if trace_file is not None:
        handle = open(trace_file, "w", newline="")
        writer = csv.writer(handle)
        writer.writerow(TRACE_COLUMNS)

    try:
        for iteration in range(1, config.max_iterations + 1):
            try:
                st_p, st_m, phi_p, phi_m = fem.solve_both_cases(
                    mesh, tree, field.filtered, tol=config.newton_tol,
                    max_iter=config.newton_max_iter,
                    radial_bc=config.radial_bc)
            except NewtonDivergence as e:
                termination = "solver_failure"
                failure = SolverFailure(
                    f"state solve diverged at iteration {iteration}: {e}",
                    iteration=iteration)
                break
            j = sens.objective(phi_p, phi_m, config.gamma, config.convention)
            grad = sens.design_gradient(mesh, tree, field.filtered,
                                        st_p, st_m, config.gamma,
                                        config.convention)
            grad_raw = filter_adjoint(grad, mesh, radius)

            old_flat = _flat(field.raw)
            try:
                field = step(tree, mesh, field, grad_raw, config)
            except ZeroGradient:
                trace.append(TraceRow(iteration, j, phi_p, phi_m, 0.0,
                                      st_p.newton_iterations,
                                      st_m.newton_iterations))
                _emit(writer, handle, trace[-1])
                termination = "stagnation"
                break
            delta = np.linalg.norm(_flat(field.raw) - old_flat)
            denom = np.linalg.norm(old_flat)
            step_norm = delta / denom if denom > 0.0 else np.inf
            trace.append(TraceRow(iteration, j, phi_p, phi_m, step_norm,
                                  st_p.newton_iterations,
                                  st_m.newton_iterations))
            _emit(writer, handle, trace[-1])
            if checkpoint is not None and config.checkpoint_every > 0 \
                    and iteration % config.checkpoint_every == 0:
                checkpoint(iteration, field)
            if step_norm < config.stagnation_tol:
                termination = "stagnation"
                break
    finally:
        if handle is not None:
            handle.close()
    return RunResult(field=field, trace=trace, termination=termination,
                     failure=failure)


def _emit(writer, handle, row):
    if writer is None:
        return
    writer.writerow([row.iteration,
                     f"{row.objective:.17e}", f"{row.phi_plus:.17e}",
                     f"{row.phi_minus:.17e}", f"{row.step_norm:.17e}",
                     row.newton_iters_plus, row.newton_iters_minus])
    handle.flush()
