"""Structured triangular mesh of an annular sector (one rotor pole).

The sector spans theta in [0, pole_angle] between r_shaft and r_outer, with
a grid line exactly at r_rotor separating the designable rotor region from
the air gap. Quads of the polar grid are split into two triangles each. The
two radial edges are node-paired: slave-edge node i is the rotation of
master-edge node i by pole_angle, which is what the anti-periodic reduction
in the solver relies on.
"""

import numpy as np

from .errors import InvalidGeometry, IoFailure

REGION_DESIGN = 0
REGION_AIRGAP = 1
REGION_NAMES = {REGION_DESIGN: "design", REGION_AIRGAP: "airgap"}


class SectorMesh:
    def __init__(self, nodes, triangles, element_region, inner_arc, outer_arc,
                 master_edge, slave_edge, r_shaft, r_rotor, r_outer,
                 pole_angle):
        self.nodes = np.asarray(nodes, dtype=np.float64)
        self.triangles = np.asarray(triangles, dtype=np.int64)
        self.element_region = np.asarray(element_region, dtype=np.int8)
        self.inner_arc = np.asarray(inner_arc, dtype=np.int64)
        self.outer_arc = np.asarray(outer_arc, dtype=np.int64)
        self.master_edge = np.asarray(master_edge, dtype=np.int64)
        self.slave_edge = np.asarray(slave_edge, dtype=np.int64)
        self.r_shaft = float(r_shaft)
        self.r_rotor = float(r_rotor)
        self.r_outer = float(r_outer)
        self.pole_angle = float(pole_angle)
        self._p1 = None

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.triangles.shape[0]

    @property
    def design_elements(self):
        return np.flatnonzero(self.element_region == REGION_DESIGN)

    @property
    def probe_master(self):
        """Master-edge node at the rotor radius (flux probe)."""
        r = np.linalg.norm(self.nodes[self.master_edge], axis=1)
        return int(self.master_edge[np.argmin(np.abs(r - self.r_rotor))])

    @property
    def probe_slave(self):
        r = np.linalg.norm(self.nodes[self.slave_edge], axis=1)
        return int(self.slave_edge[np.argmin(np.abs(r - self.r_rotor))])

    def p1_coefficients(self):
        """Per-element P1 gradients: (b, c, area) with grad(phi_i) = (b_i, c_i)/(2A)."""
        if self._p1 is None:
            x = self.nodes[self.triangles, 0]
            y = self.nodes[self.triangles, 1]
            b = np.empty_like(x)
            c = np.empty_like(x)
            for i in range(3):
                j, k = (i + 1) % 3, (i + 2) % 3
                b[:, i] = y[:, j] - y[:, k]
                c[:, i] = x[:, k] - x[:, j]
            area = 0.5 * (x[:, 0] * b[:, 0] + x[:, 1] * b[:, 1]
                          + x[:, 2] * b[:, 2])
            self._p1 = (b, c, area)
        return self._p1

    def areas(self):
        return self.p1_coefficients()[2]

    def centroids(self):
        return self.nodes[self.triangles].mean(axis=1)


def generate_sector_mesh(r_shaft=0.030, r_rotor=0.080, r_outer=0.085,
                         pole_angle=np.pi / 6, target_element_count=2000):
    if not 0.0 < r_shaft < r_rotor < r_outer:
        raise InvalidGeometry(
            f"need 0 < r_shaft < r_rotor < r_outer, got "
            f"{r_shaft}, {r_rotor}, {r_outer}")
    if not 0.0 < pole_angle <= np.pi:
        raise InvalidGeometry(f"pole_angle must be in (0, pi], got {pole_angle}")
    if target_element_count < 4:
        raise InvalidGeometry("target_element_count must be at least 4")

    span = r_outer - r_shaft
    arc = 0.5 * (r_shaft + r_outer) * pole_angle
    quads = target_element_count / 2.0
    n_r = max(2, int(round(np.sqrt(quads * span / arc))))
    n_t = max(1, int(round(quads / n_r)))
    n_gap = max(1, int(round(n_r * (r_outer - r_rotor) / span)))
    n_design = max(1, n_r - n_gap)
    n_r = n_design + n_gap

    radii = np.concatenate([
        np.linspace(r_shaft, r_rotor, n_design + 1),
        np.linspace(r_rotor, r_outer, n_gap + 1)[1:],
    ])
    theta = np.linspace(0.0, pole_angle, n_t + 1)

    rr, tt = np.meshgrid(radii, theta, indexing="ij")
    nodes = np.stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()],
                     axis=1)

    def nid(i_r, i_t):
        return i_r * (n_t + 1) + i_t

    triangles = []
    region = []
    for i_r in range(n_r):
        tag = REGION_DESIGN if i_r < n_design else REGION_AIRGAP
        for i_t in range(n_t):
            n00 = nid(i_r, i_t)
            n10 = nid(i_r + 1, i_t)
            n11 = nid(i_r + 1, i_t + 1)
            n01 = nid(i_r, i_t + 1)
            triangles.append((n00, n10, n11))
            triangles.append((n00, n11, n01))
            region.extend((tag, tag))

    n_radii = n_r + 1
    inner_arc = np.array([nid(0, i_t) for i_t in range(n_t + 1)])
    outer_arc = np.array([nid(n_r, i_t) for i_t in range(n_t + 1)])
    master_edge = np.array([nid(i_r, 0) for i_r in range(n_radii)])
    slave_edge = np.array([nid(i_r, n_t) for i_r in range(n_radii)])

    return SectorMesh(nodes, triangles, region, inner_arc, outer_arc,
                      master_edge, slave_edge, r_shaft, r_rotor, r_outer,
                      pole_angle)


def write_mesh(mesh, path):
    """Plain-text format: header, one node per line, one element per line."""
    try:
        with open(path, "w") as f:
            f.write(f"sector {mesh.r_shaft!r} {mesh.r_rotor!r} "
                    f"{mesh.r_outer!r} {mesh.pole_angle!r}\n")
            f.write(f"nodes {mesh.n_nodes}\n")
            for i, (x, y) in enumerate(mesh.nodes):
                f.write(f"{i} {float(x)!r} {float(y)!r}\n")
            f.write(f"elements {mesh.n_elements}\n")
            for i, (tri, reg) in enumerate(zip(mesh.triangles,
                                               mesh.element_region)):
                f.write(f"{i} {tri[0]} {tri[1]} {tri[2]} {REGION_NAMES[reg]}\n")
    except OSError as e:
        raise IoFailure(f"cannot write mesh to {path}: {e}") from e


def read_mesh(path):
    try:
        with open(path) as f:
            lines = f.read().split("\n")
    except OSError as e:
        raise IoFailure(f"cannot read mesh from {path}: {e}") from e
    try:
        head = lines[0].split()
        if head[0] != "sector":
            raise ValueError("missing sector header")
        r_shaft, r_rotor, r_outer, pole_angle = map(float, head[1:5])
        k = 1
        tag, count = lines[k].split()
        if tag != "nodes":
            raise ValueError("missing nodes header")
        n_nodes = int(count)
        nodes = np.empty((n_nodes, 2))
        for i in range(n_nodes):
            idx, x, y = lines[k + 1 + i].split()
            nodes[int(idx)] = (float(x), float(y))
        k += 1 + n_nodes
        tag, count = lines[k].split()
        if tag != "elements":
            raise ValueError("missing elements header")
        n_elem = int(count)
        triangles = np.empty((n_elem, 3), dtype=np.int64)
        region = np.empty(n_elem, dtype=np.int8)
        names = {v: key for key, v in REGION_NAMES.items()}
        for i in range(n_elem):
            idx, n1, n2, n3, reg = lines[k + 1 + i].split()
            triangles[int(idx)] = (int(n1), int(n2), int(n3))
            region[int(idx)] = names[reg]
    except (ValueError, IndexError, KeyError) as e:
        raise IoFailure(f"malformed mesh file {path}: {e}") from e

    r = np.linalg.norm(nodes, axis=1)
    theta = np.arctan2(nodes[:, 1], nodes[:, 0])
    tol = 1e-9 * r_outer
    inner = np.flatnonzero(np.abs(r - r_shaft) < tol)
    outer = np.flatnonzero(np.abs(r - r_outer) < tol)
    master = np.flatnonzero(np.abs(theta) < 1e-12)
    slave = np.flatnonzero(np.abs(theta - pole_angle) < 1e-12)
    master = master[np.argsort(r[master])]
    slave = slave[np.argsort(r[slave])]
    inner = inner[np.argsort(theta[inner])]
    outer = outer[np.argsort(theta[outer])]
    return SectorMesh(nodes, triangles, region, inner, outer, master, slave,
                      r_shaft, r_rotor, r_outer, pole_angle)
