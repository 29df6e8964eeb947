"""Vectorized numpy builds of the hot kernels.

Every function here has a loop-based numba twin in ``numba_impl`` with the
same signature and semantics; the benchmark suite compares the two.

Geometry conventions shared by all kernels:
  * facet planes are stored as outward unit normal ``n`` and offset ``d``
    with ``n . x = d`` on the plane, so ``h(x) = d - n . x`` is the inward
    distance (``h >= 0`` inside);
  * points closer than ``nudge_eps`` to any facet are pulled toward the
    centroid until every facet clears ``nudge_eps`` before the rational
    weight form is evaluated (avoids 0/0 at vertices).
"""

import numpy as np

NUDGE_EPS = 1e-12
# points at most this far outside count as inside for projection, which makes
# project(project(p)) bitwise idempotent despite round-off on the boundary
PROJECT_TOL = 1e-12


def _plane_dist(pts, normals, offsets):
    """offsets - pts . normals with a fixed accumulation order.

    Deliberately avoids the BLAS matmul: gemm kernel selection depends on
    the batch size, which would make the last bits of the weights differ
    between batched and point-at-a-time calls.
    """
    acc = pts[:, 0:1] * normals[None, :, 0]
    for d in range(1, pts.shape[1]):
        acc = acc + pts[:, d:d + 1] * normals[None, :, d]
    return offsets[None, :] - acc


def _nudged(pts, normals, offsets, centroid):
    """Return (pts', hmin) with near-boundary points moved inward."""
    h = _plane_dist(pts, normals, offsets)  # (N, F)
    hmin = h.min(axis=1)
    near = hmin < NUDGE_EPS
    if np.any(near):
        hc = float(np.min(offsets - normals @ centroid))
        t = (NUDGE_EPS - hmin[near]) / (hc - hmin[near])
        pts = pts.copy()
        pts[near] += t[:, None] * (centroid[None, :] - pts[near])
    return pts, hmin


def polygon_weights(normals, offsets, centroid, pts):
    """Wachspress weights and gradients on a convex polygon.

    Vertex i is the intersection of edges i-1 and i (edge e joins vertex e
    to vertex e+1). Uses the polar-dual form w_i = cross(u_{i-1}, u_i) with
    u_e = n_e / h_e, whose gradient is (u_{i-1} + u_i) w_i.

    Returns (weights (N, n), gradients (N, n, 2), hmin (N,)); hmin is the
    inward distance of the original points (negative means outside).
    """
    n = normals.shape[0]
    pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=np.float64)
    pts, hmin = _nudged(pts, normals, offsets, centroid)

    h = _plane_dist(pts, normals, offsets)  # (N, n)
    u = normals[None, :, :] / h[:, :, None]  # (N, n, 2)
    uprev = np.roll(u, 1, axis=1)
    w = uprev[:, :, 0] * u[:, :, 1] - uprev[:, :, 1] * u[:, :, 0]
    gw = (uprev + u) * w[:, :, None]

    wsum = w.sum(axis=1)
    omega = w / wsum[:, None]
    grad = (gw - omega[:, :, None] * gw.sum(axis=1)[:, None, :]) / wsum[:, None, None]
    return omega, grad, hmin


def polytope3_weights(normals, offsets, centroid, tri_vertex, tri_faces, nverts, pts):
    """Wachspress weights and gradients on a convex polyhedron.

    The fan triangulation of each vertex's polar-dual face is given by
    ``tri_vertex`` (owning vertex per triple) and ``tri_faces`` (facet index
    triples); w_v = sum of det(u_a, u_b, u_c) over the vertex's triples and
    its gradient adds (u_a + u_b + u_c) per determinant.
    """
    pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=np.float64)
    pts, hmin = _nudged(pts, normals, offsets, centroid)
    npts = pts.shape[0]

    h = _plane_dist(pts, normals, offsets)  # (N, F)
    u = normals[None, :, :] / h[:, :, None]  # (N, F, 3)

    ua = u[:, tri_faces[:, 0], :]
    ub = u[:, tri_faces[:, 1], :]
    uc = u[:, tri_faces[:, 2], :]
    det = np.einsum("ti,ti->t", np.cross(ua, ub).reshape(-1, 3),
                    uc.reshape(-1, 3)).reshape(npts, -1)
    gdet = (ua + ub + uc) * det[:, :, None]

    w = np.zeros((npts, nverts))
    gw = np.zeros((npts, nverts, 3))
    np.add.at(w, (slice(None), tri_vertex), det)
    np.add.at(gw, (slice(None), tri_vertex), gdet)

    wsum = w.sum(axis=1)
    omega = w / wsum[:, None]
    grad = (gw - omega[:, :, None] * gw.sum(axis=1)[:, None, :]) / wsum[:, None, None]
    return omega, grad, hmin


def project_polygon(vertices, normals, offsets, pts):
    """Exact Euclidean projection of points onto a convex polygon.

    Interior points are returned bit-for-bit unchanged; exterior points get
    the nearest point over all edge segments (vertices included via the
    segment parameter clamp).
    """
    pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=np.float64)
    out = pts.copy()
    h = _plane_dist(pts, normals, offsets)
    outside = h.min(axis=1) < -PROJECT_TOL
    if not np.any(outside):
        return out

    p = pts[outside]  # (M, 2)
    v0 = vertices
    v1 = np.roll(vertices, -1, axis=0)
    d = v1 - v0  # (n, 2)
    dd = (d * d).sum(axis=1)
    t = ((p[:, None, :] - v0[None, :, :]) * d[None, :, :]).sum(axis=2) / dd[None, :]
    t = np.clip(t, 0.0, 1.0)
    q = v0[None, :, :] + t[:, :, None] * d[None, :, :]  # (M, n, 2)
    dist2 = ((q - p[:, None, :]) ** 2).sum(axis=2)
    best = dist2.argmin(axis=1)
    out[outside] = q[np.arange(p.shape[0]), best]
    return out


def project_polytope3(vertices, face_normals, face_offsets, face_loops,
                      face_edge_normals, edges, pts):
    """Exact Euclidean projection onto a convex polyhedron.

    Enumerates the face lattice: per-face plane projection kept when it lands
    inside the face polygon (in-plane outward edge normals test), plus every
    edge-segment clamp. ``face_loops`` is (F, max_deg) padded with -1.
    """
    pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=np.float64)
    out = pts.copy()
    h = _plane_dist(pts, face_normals, face_offsets)
    outside = h.min(axis=1) < -PROJECT_TOL
    if not np.any(outside):
        return out

    p = pts[outside]
    m = p.shape[0]
    best_d2 = np.full(m, np.inf)
    best_q = np.zeros((m, 3))

    valid_mask = face_loops >= 0  # (F, max_deg)
    anchors = vertices[np.where(face_loops >= 0, face_loops, 0)]  # (F, max_deg, 3)
    for f in range(face_normals.shape[0]):
        # signed outward distance, fixed-order like _plane_dist
        fn = face_normals[f]
        s = (p[:, 0] * fn[0] + p[:, 1] * fn[1] + p[:, 2] * fn[2]) - face_offsets[f]
        q = p - s[:, None] * face_normals[f][None, :]
        rel = q[:, None, :] - anchors[f][None, :, :]  # (m, max_deg, 3)
        side = np.einsum("mkd,kd->mk", rel, face_edge_normals[f])
        inside_face = np.all((side <= 1e-12) | ~valid_mask[f][None, :], axis=1)
        d2 = s * s
        take = inside_face & (d2 < best_d2)
        best_d2[take] = d2[take]
        best_q[take] = q[take]

    a = vertices[edges[:, 0]]
    d = vertices[edges[:, 1]] - a  # (E, 3)
    dd = (d * d).sum(axis=1)
    t = np.clip(((p[:, None, :] - a[None, :, :]) * d[None, :, :]).sum(axis=2)
                / dd[None, :], 0.0, 1.0)
    q = a[None, :, :] + t[:, :, None] * d[None, :, :]  # (m, E, 3)
    d2 = ((q - p[:, None, :]) ** 2).sum(axis=2)
    e_best = d2.argmin(axis=1)
    e_d2 = d2[np.arange(m), e_best]
    take = e_d2 < best_d2
    best_q[take] = q[np.arange(m), e_best][take]

    out[outside] = best_q
    return out


def froelich_polarization(bvec, js, a):
    """Isotropic Froelich-type polarization law and its B-derivative.

    jp(b) = js*a*b / (js + a*b) applied along B; both jp/b and jp'(b)
    stay bounded by ``a`` so the law keeps the H(B) map monotone.
    """
    bvec = np.ascontiguousarray(np.atleast_2d(bvec), dtype=np.float64)
    npts = bvec.shape[0]
    b = np.sqrt(bvec[:, 0] ** 2 + bvec[:, 1] ** 2)
    denom = js + a * b
    sec = js * a / denom          # jp(b)/b, -> a as b -> 0
    tan = a * js * js / denom**2  # jp'(b)

    jp = sec[:, None] * bvec
    djp = np.zeros((npts, 2, 2))
    nz = b > 0.0
    bh = np.zeros_like(bvec)
    bh[nz] = bvec[nz] / b[nz, None]
    outer = bh[:, :, None] * bh[:, None, :]
    eye = np.eye(2)[None, :, :]
    djp[:] = sec[:, None, None] * eye + (tan - sec)[:, None, None] * outer
    djp[~nz] = a * eye
    return jp, djp


def p1_element_b(a_elem, bcoef, ccoef, inv2a):
    """Element-wise constant B = curl(a) from nodal values of a.

    B = sum_i a_i (c_i, -b_i) / (2A) with the standard P1 coefficients.
    """
    bx = (a_elem * ccoef).sum(axis=1) * inv2a
    by = -(a_elem * bcoef).sum(axis=1) * inv2a
    return np.stack([bx, by], axis=1)


def p1_element_system(bcoef, ccoef, area, bfield, jp, djp, jz, nu0, load_sign):
    """Per-element residual rows and Jacobian blocks of the weak form.

    R_i = nu0/2 * (B - Jp) . (c_i, -b_i) - load_sign * J * A / 3
    K_ij = nu0/(4A) * (c_i, -b_i) (I - dJp/dB) (c_j, -b_j)^T
    """
    d = bfield - jp  # (Ne, 2)
    relem = 0.5 * nu0 * (d[:, 0:1] * ccoef - d[:, 1:2] * bcoef)
    relem -= (load_sign * jz * area / 3.0)[:, None]

    # rows of curl(N_i) scaled by 2A: g_i = (c_i, -b_i)
    g = np.stack([ccoef, -bcoef], axis=2)  # (Ne, 3, 2)
    m = np.eye(2)[None, :, :] - djp
    kelem = np.einsum("eia,eab,ejb->eij", g, m, g) * (nu0 / (4.0 * area))[:, None, None]
    return relem, kelem
