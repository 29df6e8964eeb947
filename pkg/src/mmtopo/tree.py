"""Recursive material interpolation over a rooted tree of convex polytopes.

Nodes are labeled by index tuples: () is the root, (3, 1) is child 1 of
child 3 of the root. Internal nodes carry a polytope whose vertices map
one-to-one onto the node's children; leaves carry a material model. A design
assigns one point per internal node, and the interpolated property at a
design is the barycentric blend of the children, applied recursively.
"""

from dataclasses import dataclass

import numpy as np

from . import materials as mat
from . import polytope as pt
from .errors import (ChildCountMismatch, DuplicateMaterialLeaf,
                     InvalidParameters, OrphanNode, UnknownLabel)


def parse_label(key):
    """'' or 'root' -> (); '3.1' -> (3, 1); tuples pass through."""
    if isinstance(key, tuple):
        return tuple(int(i) for i in key)
    if isinstance(key, int):
        return (key,)
    key = str(key).strip()
    if key in ("", "root"):
        return ()
    return tuple(int(part) for part in key.split("."))


def format_label(label):
    return ".".join(str(i) for i in label) if label else "root"


@dataclass(frozen=True)
class Leaf:
    label: tuple
    material: object


@dataclass(frozen=True)
class InternalNode:
    label: tuple
    polytope: pt.Polytope
    children: tuple


@dataclass(frozen=True)
class PropertyValue:
    polarization: np.ndarray          # (..., 2) tesla
    current_density: np.ndarray       # (...,) A/m^2
    d_polarization_dB: np.ndarray | None = None  # (..., 2, 2)


@dataclass(frozen=True)
class PropertyGradient:
    """Derivative of the root property w.r.t. one node's design point."""

    d_polarization: np.ndarray     # (..., dim, 2)
    d_current_density: np.ndarray  # (..., dim)


class InterpTree:
    def __init__(self, nodes):
        self.nodes = dict(nodes)
        self.internal_labels = tuple(sorted(
            l for l, n in self.nodes.items() if isinstance(n, InternalNode)))
        self.leaf_labels = tuple(sorted(
            l for l, n in self.nodes.items() if isinstance(n, Leaf)))
        self.dims = {l: self.nodes[l].polytope.dim for l in self.internal_labels}

    @property
    def total_dimension(self):
        return sum(self.dims.values())

    @property
    def leaf_materials(self):
        return [self.nodes[l].material for l in self.leaf_labels]

    def node(self, label):
        label = parse_label(label)
        if label not in self.nodes:
            raise UnknownLabel(f"no node {format_label(label)} in tree")
        return self.nodes[label]

    def is_leaf(self, label):
        return isinstance(self.node(label), Leaf)

    def children(self, label):
        node = self.node(label)
        return list(node.children) if isinstance(node, InternalNode) else []

    def describe(self):
        lines = []
        for label in sorted(self.nodes):
            node = self.nodes[label]
            if isinstance(node, Leaf):
                lines.append(f"{format_label(label):<8} leaf     "
                             f"material={node.material.name}")
            else:
                kids = ", ".join(format_label(c) for c in node.children)
                lines.append(f"{format_label(label):<8} node     "
                             f"polytope(dim={node.polytope.dim}, "
                             f"n={node.polytope.vertex_count})  "
                             f"children: {kids}")
        return "\n".join(lines)


def build_tree(spec, catalogue=None):
    """Validate a {label: {'polytope': ...} | {'material': ...}} mapping.

    Polytopes may be given as Polytope instances or shape-config dicts;
    materials as model objects or catalogue names.
    """
    catalogue = catalogue or mat.default_catalogue()
    entries = {}
    for key, val in spec.items():
        label = parse_label(key)
        if label in entries:
            raise InvalidParameters(f"duplicate node {format_label(label)}")
        entries[label] = val

    if () not in entries:
        raise OrphanNode("tree has no root node")

    children = {}
    for label in entries:
        if label == ():
            continue
        parent = label[:-1]
        if parent not in entries:
            raise OrphanNode(f"node {format_label(label)} has no parent "
                             f"{format_label(parent)}")
        children.setdefault(parent, []).append(label)

    nodes = {}
    seen_materials = set()
    for label, val in entries.items():
        kids = sorted(children.get(label, []))
        if "material" in val:
            if kids:
                raise OrphanNode(
                    f"leaf {format_label(label)} cannot have children "
                    f"{[format_label(k) for k in kids]}")
            m = val["material"]
            if isinstance(m, str):
                m = catalogue[catalogue.index(m)]
            if m.name in seen_materials:
                raise DuplicateMaterialLeaf(
                    f"material {m.name!r} appears on more than one leaf")
            seen_materials.add(m.name)
            nodes[label] = Leaf(label, m)
        elif "polytope" in val:
            poly = val["polytope"]
            if not isinstance(poly, pt.Polytope):
                poly = pt.polytope_from_config(poly)
            indices = [k[-1] for k in kids]
            if indices != list(range(1, len(kids) + 1)):
                raise ChildCountMismatch(
                    f"children of {format_label(label)} must be indexed "
                    f"1..k, got {indices}")
            if len(kids) != poly.vertex_count:
                raise ChildCountMismatch(
                    f"node {format_label(label)} has {len(kids)} children "
                    f"but its polytope has {poly.vertex_count} vertices")
            nodes[label] = InternalNode(label, poly, tuple(kids))
        else:
            raise InvalidParameters(
                f"node {format_label(label)} needs 'polytope' or 'material'")

    if isinstance(nodes[()], Leaf):
        raise InvalidParameters("root must be an internal node")
    return InterpTree(nodes)


def default_rotor_tree(catalogue=None):
    """Six-dimensional recursive tree over the 16-material catalogue.

    Root triangle mixes air, steel, and an excitation branch; the excitation
    segment mixes a 12-gon of PM orientations with a segment of +-J
    conductors. Materials of the same nature share one low-dimensional
    subdomain each: 2 + 1 + 2 + 1 = 6 total design dimensions.
    """
    catalogue = catalogue or mat.default_catalogue()
    spec = {
        (): {"polytope": pt.regular_polygon(3)},
        (1,): {"material": "air"},
        (2,): {"material": "steel"},
        (3,): {"polytope": pt.segment()},
        (3, 1): {"polytope": pt.regular_polygon(12)},
        (3, 2): {"polytope": pt.segment()},
        (3, 2, 1): {"material": "conductor_pos"},
        (3, 2, 2): {"material": "conductor_neg"},
    }
    for k in range(12):
        spec[(3, 1, k + 1)] = {"material": f"pm_{30 * k:03d}"}
    return build_tree(spec, catalogue)


# ---------------------------------------------------------------------------
# evaluation


def _normalize_inputs(tree, rho, b):
    """Broadcast design coords and B to a common batch size."""
    extra = set(rho) - set(tree.internal_labels)
    if extra:
        raise UnknownLabel(f"design has unknown labels {sorted(extra)}")
    single = True
    arrays = {}
    n = 1
    for label in tree.internal_labels:
        if label not in rho:
            raise UnknownLabel(f"design missing node {format_label(label)}")
        a = np.asarray(rho[label], dtype=np.float64)
        dim = tree.dims[label]
        if a.ndim > 1:
            single = False
        a = a.reshape(-1, dim)
        arrays[label] = a
        n = max(n, a.shape[0])
    b = np.asarray(b, dtype=np.float64)
    if b.ndim > 1:
        single = False
    b = b.reshape(-1, 2)
    n = max(n, b.shape[0])
    for label, a in arrays.items():
        if a.shape[0] == n:
            continue
        if a.shape[0] != 1:
            raise InvalidParameters(
                f"batch size mismatch at {format_label(label)}: "
                f"{a.shape[0]} vs {n}")
        arrays[label] = np.ascontiguousarray(np.broadcast_to(a, (n, a.shape[1])))
    if b.shape[0] not in (1, n):
        raise InvalidParameters(f"batch size mismatch for B: {b.shape[0]} vs {n}")
    if b.shape[0] != n:
        b = np.ascontiguousarray(np.broadcast_to(b, (n, 2)))
    return arrays, b, n, single


def _node_values(tree, arrays, b, n, with_db=False):
    """Post-order pass: property value (and optional B-derivative) per node."""
    weights = {}
    values = {}

    def visit(label):
        node = tree.nodes[label]
        if isinstance(node, Leaf):
            m = node.material
            pol = np.broadcast_to(m.polarization(b), (n, 2))
            cur = np.full(n, m.current_density)
            db = m.d_polarization_dB(b) if with_db else None
            if db is not None:
                db = np.broadcast_to(db, (n, 2, 2))
            values[label] = (pol, cur, db)
            return values[label]
        w, g = node.polytope.weights(arrays[label])
        weights[label] = (w, g)
        pol = np.zeros((n, 2))
        cur = np.zeros(n)
        db = np.zeros((n, 2, 2)) if with_db else None
        for i, child in enumerate(node.children):
            cpol, ccur, cdb = visit(child)
            wi = w[:, i]
            pol += wi[:, None] * cpol
            cur += wi * ccur
            if with_db:
                db += wi[:, None, None] * cdb
        values[label] = (pol, cur, db)
        return values[label]

    visit(())
    return values, weights


def eval(tree, rho, b):
    """Interpolated (polarization, current density) at the design point."""
    arrays, b, n, single = _normalize_inputs(tree, rho, b)
    values, _ = _node_values(tree, arrays, b, n)
    pol, cur, _ = values[()]
    if single:
        return PropertyValue(pol[0], cur[0])
    return PropertyValue(pol, cur)


def eval_dB(tree, rho, b):
    """Same recursion with leaf laws replaced by their B-derivatives."""
    arrays, b, n, single = _normalize_inputs(tree, rho, b)
    values, _ = _node_values(tree, arrays, b, n, with_db=True)
    pol, cur, db = values[()]
    if single:
        return PropertyValue(pol[0], cur[0], db[0])
    return PropertyValue(pol, cur, db)


def eval_drho(tree, rho, b):
    """Derivatives of the root property w.r.t. every node's design point.

    Pre-order accumulation: at node l reached with factor k (the product of
    ancestor edge weights), d(root)/d(rho_l) = k * sum_i kappa_i dw_i/drho_l,
    and child i is visited with factor k*w_i.
    """
    arrays, b, n, single = _normalize_inputs(tree, rho, b)
    values, weights = _node_values(tree, arrays, b, n)
    out = {}

    def descend(label, factor):
        node = tree.nodes[label]
        w, g = weights[label]
        child_pol = np.stack([values[c][0] for c in node.children], axis=1)
        child_cur = np.stack([values[c][1] for c in node.children], axis=1)
        dpol = np.einsum("nkd,nkc->ndc", g, child_pol)
        dcur = np.einsum("nkd,nk->nd", g, child_cur)
        out[label] = PropertyGradient(factor[:, None, None] * dpol,
                                      factor[:, None] * dcur)
        for i, child in enumerate(node.children):
            if isinstance(tree.nodes[child], InternalNode):
                descend(child, factor * w[:, i])

    descend((), np.ones(n))
    if single:
        out = {l: PropertyGradient(v.d_polarization[0], v.d_current_density[0])
               for l, v in out.items()}
    return out


def flatten_oracle(tree, rho, b):
    """Sum over leaves of (product of path weights) * leaf property.

    Independent evaluation route used to cross-check eval: it never
    collapses the recursion, it walks every root-to-leaf path separately.
    """
    arrays, b, n, single = _normalize_inputs(tree, rho, b)
    pol = np.zeros((n, 2))
    cur = np.zeros(n)
    for leaf_label in tree.leaf_labels:
        path_w = np.ones(n)
        label = leaf_label
        while label != ():
            parent = label[:-1]
            w, _ = tree.nodes[parent].polytope.weights(arrays[parent])
            path_w = path_w * w[:, label[-1] - 1]
            label = parent
        m = tree.nodes[leaf_label].material
        pol += path_w[:, None] * np.broadcast_to(m.polarization(b), (n, 2))
        cur += path_w * m.current_density
    if single:
        return PropertyValue(pol[0], cur[0])
    return PropertyValue(pol, cur)


# ---------------------------------------------------------------------------
# design handling


def project_design(tree, rho_raw):
    """Project each node's coordinates onto its own polytope, independently."""
    extra = set(rho_raw) - set(tree.internal_labels)
    if extra:
        raise UnknownLabel(f"design has unknown labels {sorted(extra)}")
    out = {}
    for label in tree.internal_labels:
        if label not in rho_raw:
            raise UnknownLabel(f"design missing node {format_label(label)}")
        a = np.asarray(rho_raw[label], dtype=np.float64)
        single = a.ndim == 1
        proj = tree.nodes[label].polytope.project(a.reshape(-1, tree.dims[label]))
        out[label] = proj[0] if single else proj
    return out


def centroid_design(tree, n=None):
    """Homogeneous design: every node at its polytope's centroid."""
    out = {}
    for label in tree.internal_labels:
        c = tree.nodes[label].polytope.centroid
        out[label] = c.copy() if n is None else np.tile(c, (n, 1))
    return out


def vertex_design(tree, leaf_label, n=None):
    """Design steering every ancestor onto the vertex path of one leaf.

    Off-path nodes sit at their centroids; their weights are multiplied by
    a vanishing path factor so they do not matter.
    """
    leaf_label = parse_label(leaf_label)
    if leaf_label not in tree.leaf_labels:
        raise UnknownLabel(f"no leaf {format_label(leaf_label)}")
    out = centroid_design(tree, n)
    for depth in range(len(leaf_label)):
        parent = leaf_label[:depth]
        vertex = tree.nodes[parent].polytope.vertices[leaf_label[depth] - 1]
        out[parent] = vertex.copy() if n is None else np.tile(vertex, (n, 1))
    return out


def dominant_leaf(tree, rho):
    """Index into tree.leaf_labels of the max path-product weight per point."""
    arrays = {l: np.asarray(rho[l], dtype=np.float64).reshape(-1, tree.dims[l])
              for l in tree.internal_labels}
    n = max(a.shape[0] for a in arrays.values())
    best_w = np.full(n, -np.inf)
    best_i = np.zeros(n, dtype=np.int64)
    for i, leaf_label in enumerate(tree.leaf_labels):
        path_w = np.ones(n)
        label = leaf_label
        while label != ():
            parent = label[:-1]
            w, _ = tree.nodes[parent].polytope.weights(arrays[parent])
            path_w = path_w * w[:, label[-1] - 1]
            label = parent
        better = path_w > best_w
        best_w[better] = path_w[better]
        best_i[better] = i
    return best_i
