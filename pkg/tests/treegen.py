"""Randomized interpolation-tree generator shared by the test suites."""

import numpy as np

from mmtopo import polytope as pt
from mmtopo import tree as itree
from mmtopo.materials import ConstantMaterial


def random_scalar_tree(rng, max_depth=3, max_leaves=20):
    """Random tree whose leaves carry distinct constant scalar properties.

    The scalar rides on current_density; polarization vectors are random
    constants so both property channels get exercised.
    """
    spec = {}
    counter = [0]

    def add_node(label, depth):
        leaves_so_far = sum(1 for v in spec.values() if "material" in v)
        room = max_leaves - leaves_so_far
        must_leaf = depth >= max_depth or room <= 1
        if label != () and (must_leaf or rng.random() < 0.55):
            counter[0] += 1
            value = float(rng.uniform(-5.0, 5.0))
            spec[label] = {"material": ConstantMaterial(
                f"m{counter[0]}", jp=rng.uniform(-1, 1, size=2),
                current_density=value)}
            return
        n = int(rng.integers(2, min(6, max(3, room)) + 1))
        poly = pt.segment() if n == 2 else pt.regular_polygon(n)
        spec[label] = {"polytope": poly}
        for i in range(1, n + 1):
            add_node(label + (i,), depth + 1)

    add_node((), 0)
    return itree.build_tree(spec)


def random_design(tree, rng, n=None, shrink=1.0):
    """Feasible random design, optionally pulled toward the centroids."""
    out = {}
    for label in tree.internal_labels:
        poly = tree.nodes[label].polytope
        size = 1 if n is None else n
        lam = rng.dirichlet(np.ones(poly.vertex_count), size=size)
        pts = lam @ poly.vertices
        pts = shrink * pts + (1.0 - shrink) * poly.centroid
        out[label] = pts[0] if n is None else pts
    return out
