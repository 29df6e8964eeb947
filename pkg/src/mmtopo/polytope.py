"""Convex polytopes (dim 1-3) with Wachspress coordinates and projection.

A polytope is immutable after construction. Construction validates convex
position and precomputes the facet-plane data the weight and projection
kernels consume: outward unit normals, plane offsets, and (in 3D) the
cyclically ordered facet fan around each vertex that drives the polar-dual
weight formula.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateGeometry, NonConvexInput, PointOutsidePolytope

OUTSIDE_TOL = 1e-12


@dataclass(frozen=True)
class BarycentricResult:
    """Weights and their spatial gradients at one evaluation point."""

    weights: np.ndarray    # (n,)
    gradients: np.ndarray  # (n, dim)


@dataclass(frozen=True)
class Polytope:
    dim: int
    vertices: np.ndarray            # (n, dim)
    faces: tuple | None = None      # dim=3 only: tuple of vertex-index loops
    # precomputed facet-plane and connectivity data, filled in by make_polytope
    _geom: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def vertex_count(self):
        return self.vertices.shape[0]

    @property
    def centroid(self):
        return self.vertices.mean(axis=0)

    def weights(self, pts):
        """Batched barycentric weights and gradients.

        pts: (N, dim). Returns (weights (N, n), gradients (N, n, dim)).
        Points within 1e-12 of the boundary are nudged inward; points
        farther than 1e-12 outside raise PointOutsidePolytope.
        """
        pts = _as_points(pts, self.dim)
        if self.dim == 1:
            w, g, hmin = _segment_weights(self.vertices, pts)
        elif self.dim == 2:
            w, g, hmin = kernels.polygon_weights(
                self._geom["normals"], self._geom["offsets"],
                self._geom["centroid"], pts)
        else:
            w, g, hmin = kernels.polytope3_weights(
                self._geom["normals"], self._geom["offsets"],
                self._geom["centroid"], self._geom["tri_vertex"],
                self._geom["tri_faces"], self.vertex_count, pts)
        if np.any(hmin < -OUTSIDE_TOL):
            worst = float(hmin.min())
            raise PointOutsidePolytope(
                f"point lies {-worst:.3e} outside the polytope; project first")
        return w, g

    def project(self, pts):
        """Batched exact Euclidean projection; see module docs of kernels."""
        pts = _as_points(pts, self.dim)
        if self.dim == 1:
            lo = self._geom["lo"]
            hi = self._geom["hi"]
            return np.clip(pts, lo, hi)
        if self.dim == 2:
            return kernels.project_polygon(
                self.vertices, self._geom["normals"], self._geom["offsets"], pts)
        return kernels.project_polytope3(
            self.vertices, self._geom["normals"], self._geom["offsets"],
            self._geom["face_loops"], self._geom["face_edge_normals"],
            self._geom["edges"], pts)

    def contains(self, p, tol=OUTSIDE_TOL):
        p = _as_points(p, self.dim)
        if self.dim == 1:
            h = np.minimum(p[:, 0] - self._geom["lo"], self._geom["hi"] - p[:, 0])
        else:
            h = (self._geom["offsets"][None, :]
                 - p @ self._geom["normals"].T).min(axis=1)
        return bool(np.all(h >= -tol))


def _as_points(pts, dim):
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        if dim == 1:
            pts = pts.reshape(-1, 1)
        else:
            pts = pts.reshape(1, dim)
    if pts.shape[-1] != dim:
        raise ValueError(f"expected points in R^{dim}, got shape {pts.shape}")
    return np.ascontiguousarray(pts)


def _segment_weights(vertices, pts):
    v0 = vertices[0, 0]
    v1 = vertices[1, 0]
    x = pts[:, 0]
    span = v1 - v0
    w = np.stack([(v1 - x) / span, (x - v0) / span], axis=1)
    g = np.empty((pts.shape[0], 2, 1))
    g[:, 0, 0] = -1.0 / span
    g[:, 1, 0] = 1.0 / span
    lo, hi = min(v0, v1), max(v0, v1)
    hmin = np.minimum(x - lo, hi - x)
    return w, g, hmin


# ---------------------------------------------------------------------------
# construction / validation


def make_polytope(dim, vertices, faces=None):
    """Validate and build a polytope; see the named constructors below.

    Raises NonConvexInput when a vertex fails to be extreme or orientation
    is wrong, DegenerateGeometry for coincident vertices / zero measure.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    if dim == 1:
        vertices = vertices.reshape(-1, 1)
    if vertices.ndim != 2 or vertices.shape[1] != dim:
        raise DegenerateGeometry(
            f"vertex array of shape {vertices.shape} does not match dim={dim}")
    scale = max(float(np.abs(vertices).max()), 1e-30)
    _check_distinct(vertices, scale)

    if dim == 1:
        return _make_segment(vertices)
    if dim == 2:
        return _make_polygon(vertices, scale)
    if dim == 3:
        if faces is None:
            raise DegenerateGeometry("dim=3 polytopes require face loops")
        return _make_polyhedron(vertices, faces, scale)
    raise DegenerateGeometry(f"unsupported dimension {dim}")


def _check_distinct(vertices, scale):
    n = vertices.shape[0]
    for i in range(n):
        d = np.linalg.norm(vertices[i + 1:] - vertices[i], axis=1)
        if d.size and d.min() < 1e-12 * scale:
            raise DegenerateGeometry("coincident vertices")


def _make_segment(vertices):
    if vertices.shape[0] != 2:
        raise DegenerateGeometry("a 1D polytope has exactly 2 vertices")
    lo = float(vertices.min())
    hi = float(vertices.max())
    geom = {"lo": lo, "hi": hi, "centroid": vertices.mean(axis=0)}
    return Polytope(1, vertices, None, geom)


def _make_polygon(vertices, scale):
    n = vertices.shape[0]
    if n < 3:
        raise DegenerateGeometry("a polygon needs at least 3 vertices")
    e = np.roll(vertices, -1, axis=0) - vertices
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    area2 = float(np.sum(vertices[:, 0] * np.roll(vertices, -1, axis=0)[:, 1]
                         - vertices[:, 1] * np.roll(vertices, -1, axis=0)[:, 0]))
    if abs(area2) < 1e-12 * scale * scale:
        raise DegenerateGeometry("polygon has zero area")
    if np.any(cross <= 1e-12 * scale * scale):
        raise NonConvexInput(
            "vertices must form a strictly convex counter-clockwise polygon")
    # outward edge normals: rotate CCW edge direction by -90 degrees
    lengths = np.linalg.norm(e, axis=1)
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1) / lengths[:, None]
    offsets = (normals * vertices).sum(axis=1)
    geom = {"normals": np.ascontiguousarray(normals),
            "offsets": np.ascontiguousarray(offsets),
            "centroid": vertices.mean(axis=0)}
    return Polytope(2, np.ascontiguousarray(vertices), None, geom)


def _make_polyhedron(vertices, faces, scale):
    faces = tuple(tuple(int(i) for i in loop) for loop in faces)
    nv = vertices.shape[0]
    for loop in faces:
        if len(loop) < 3 or len(set(loop)) != len(loop):
            raise DegenerateGeometry("face loop must list >= 3 distinct vertices")
        if min(loop) < 0 or max(loop) >= nv:
            raise DegenerateGeometry("face loop references a missing vertex")

    normals = np.empty((len(faces), 3))
    offsets = np.empty(len(faces))
    for f, loop in enumerate(faces):
        pts = vertices[list(loop)]
        # Newell normal; also validates planarity below
        nrm = np.cross(pts, np.roll(pts, -1, axis=0)).sum(axis=0)
        norm = np.linalg.norm(nrm)
        if norm < 1e-12 * scale * scale:
            raise DegenerateGeometry("zero-area face")
        nrm /= norm
        d = float(nrm @ pts.mean(axis=0))
        if np.any(np.abs(pts @ nrm - d) > 1e-9 * scale):
            raise DegenerateGeometry("non-planar face loop")
        side = vertices @ nrm - d
        outside = side > 1e-9 * scale
        if np.any(outside):
            raise NonConvexInput(
                "face plane has vertices on its outer side "
                "(non-convex set or inward-oriented loop)")
        on_plane = np.flatnonzero(np.abs(side) <= 1e-9 * scale)
        if set(on_plane) != set(loop):
            raise NonConvexInput("a vertex lies on a face plane outside the face")
        normals[f] = nrm
        offsets[f] = d

    _check_closed(faces)
    incident = [[] for _ in range(nv)]
    for f, loop in enumerate(faces):
        for v in loop:
            incident[v].append(f)
    for v in range(nv):
        if len(incident[v]) < 3:
            raise NonConvexInput(f"vertex {v} has fewer than 3 incident faces")
        if np.linalg.matrix_rank(normals[incident[v]], tol=1e-9) < 3:
            raise NonConvexInput(f"vertex {v} is not extreme")

    volume = 0.0
    for f, loop in enumerate(faces):
        pts = vertices[list(loop)]
        for k in range(1, len(loop) - 1):
            volume += np.linalg.det(np.stack([pts[0], pts[k], pts[k + 1]]))
    volume /= 6.0
    if volume < 1e-12 * scale**3:
        raise DegenerateGeometry("polyhedron has no interior")

    centroid = vertices.mean(axis=0)
    tri_vertex, tri_faces = _vertex_fans(vertices, faces, normals, offsets,
                                         incident, centroid)
    geom = {
        "normals": np.ascontiguousarray(normals),
        "offsets": np.ascontiguousarray(offsets),
        "centroid": centroid,
        "tri_vertex": tri_vertex,
        "tri_faces": tri_faces,
        "edges": _edge_array(faces),
        "face_loops": _padded_loops(faces),
        "face_edge_normals": _face_edge_normals(vertices, faces, normals),
    }
    return Polytope(3, np.ascontiguousarray(vertices), faces, geom)


def _check_closed(faces):
    directed = {}
    for f, loop in enumerate(faces):
        for k in range(len(loop)):
            e = (loop[k], loop[(k + 1) % len(loop)])
            if e in directed:
                raise DegenerateGeometry(f"directed edge {e} appears twice")
            directed[e] = f
    for (a, b) in directed:
        if (b, a) not in directed:
            raise DegenerateGeometry(
                f"edge ({a},{b}) has no oppositely oriented twin")


def _vertex_fans(vertices, faces, normals, offsets, incident, centroid):
    """Cyclically order each vertex's incident faces and fan-triangulate.

    Adjacent faces around v share an edge through v; the walk follows the
    directed-edge twin structure. The cycle is flipped when the polar-dual
    determinant comes out negative at the centroid.
    """
    nv = vertices.shape[0]
    succ = {}  # directed edge -> owning face
    for f, loop in enumerate(faces):
        for k in range(len(loop)):
            succ[(loop[k], loop[(k + 1) % len(loop)])] = f

    hc = offsets - normals @ centroid
    u = normals / hc[:, None]

    tri_vertex = []
    tri_faces = []
    for v in range(nv):
        start = incident[v][0]
        cycle = [start]
        f = start
        while True:
            loop = faces[f]
            k = loop.index(v)
            nxt = loop[(k + 1) % len(loop)]
            f = succ[(nxt, v)]  # face across edge (v, nxt)
            if f == start:
                break
            cycle.append(f)
        if len(cycle) != len(incident[v]):
            raise NonConvexInput(f"faces around vertex {v} do not form one fan")
        det = np.linalg.det(np.stack([u[cycle[0]], u[cycle[1]], u[cycle[2]]]))
        if det < 0.0:
            cycle.reverse()
        for i in range(1, len(cycle) - 1):
            tri_vertex.append(v)
            tri_faces.append((cycle[0], cycle[i], cycle[i + 1]))
    return (np.asarray(tri_vertex, dtype=np.int64),
            np.asarray(tri_faces, dtype=np.int64))


def _edge_array(faces):
    edges = set()
    for loop in faces:
        for k in range(len(loop)):
            a, b = loop[k], loop[(k + 1) % len(loop)]
            edges.add((min(a, b), max(a, b)))
    return np.asarray(sorted(edges), dtype=np.int64)


def _padded_loops(faces):
    deg = max(len(loop) for loop in faces)
    out = np.full((len(faces), deg), -1, dtype=np.int64)
    for f, loop in enumerate(faces):
        out[f, :len(loop)] = loop
    return out


def _face_edge_normals(vertices, faces, normals):
    """In-plane outward edge normals per face, aligned with face_loops."""
    deg = max(len(loop) for loop in faces)
    out = np.zeros((len(faces), deg, 3))
    for f, loop in enumerate(faces):
        for k in range(len(loop)):
            a = vertices[loop[k]]
            b = vertices[loop[(k + 1) % len(loop)]]
            m = np.cross(b - a, normals[f])
            out[f, k] = m / np.linalg.norm(m)
    return out


# ---------------------------------------------------------------------------
# named constructors


def segment(v0=0.0, v1=1.0):
    """1D interval polytope."""
    return make_polytope(1, [[float(v0)], [float(v1)]])


def regular_polygon(n, radius=1.0):
    """Regular n-gon, first vertex on the +x axis, counter-clockwise."""
    ang = 2.0 * np.pi * np.arange(n) / n
    verts = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return make_polytope(2, verts)


def diamond(n_equator=12, apex=1.0):
    """Bipyramid: regular n-gon equator at z=0 plus apexes at (0,0,+-apex)."""
    ang = 2.0 * np.pi * np.arange(n_equator) / n_equator
    verts = np.zeros((n_equator + 2, 3))
    verts[:n_equator, 0] = np.cos(ang)
    verts[:n_equator, 1] = np.sin(ang)
    verts[n_equator, 2] = apex     # top
    verts[n_equator + 1, 2] = -apex  # bottom
    top, bot = n_equator, n_equator + 1
    faces = []
    for k in range(n_equator):
        k1 = (k + 1) % n_equator
        faces.append((k, k1, top))
        faces.append((k1, k, bot))
    return make_polytope(3, verts, faces)


def polytope_from_config(cfg):
    """Build a polytope from a config mapping, e.g. {"shape": "regular_polygon", "n": 16}."""
    cfg = dict(cfg)
    shape = cfg.pop("shape")
    if shape == "segment":
        return segment(cfg.get("v0", 0.0), cfg.get("v1", 1.0))
    if shape == "regular_polygon":
        return regular_polygon(cfg["n"], cfg.get("radius", 1.0))
    if shape == "diamond":
        return diamond(cfg.get("n", 12), cfg.get("apex", 1.0))
    raise ValueError(f"unknown polytope shape {shape!r}")


# ---------------------------------------------------------------------------
# point-level API


def barycentric(poly, p):
    """Wachspress coordinates and gradients at a single point."""
    w, g = poly.weights(_as_points(p, poly.dim))
    return BarycentricResult(w[0], g[0])


def project(poly, p):
    """Euclidean projection of a single point onto the polytope."""
    p = _as_points(p, poly.dim)
    return poly.project(p)[0]


def sample_interior(poly, rng_seed=None):
    """Strictly interior point; the default is the vertex centroid."""
    if rng_seed is None:
        return poly.centroid
    rng = np.random.default_rng(rng_seed)
    w = rng.dirichlet(np.ones(poly.vertex_count))
    return w @ poly.vertices
