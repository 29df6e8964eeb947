"""Numba builds of the hot kernels; see numpy_impl for the conventions.

Public wrappers normalize array layout, the @njit cores do the loops.
Compiled artifacts are disk-cached, so the one-off JIT cost is paid per
machine, not per process.
"""

import numpy as np
from numba import njit

NUDGE_EPS = 1e-12
PROJECT_TOL = 1e-12


def _prep(pts, dim):
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, dim)
    return np.ascontiguousarray(pts)


@njit(cache=True)
def _nudge_core(pts, normals, offsets, centroid, hmin):
    npts, dim = pts.shape
    nf = normals.shape[0]
    hc = np.inf
    for f in range(nf):
        s = offsets[f]
        for d in range(dim):
            s -= normals[f, d] * centroid[d]
        hc = min(hc, s)
    for i in range(npts):
        hm = np.inf
        for f in range(nf):
            s = offsets[f]
            for d in range(dim):
                s -= normals[f, d] * pts[i, d]
            hm = min(hm, s)
        hmin[i] = hm
        if hm < NUDGE_EPS:
            t = (NUDGE_EPS - hm) / (hc - hm)
            for d in range(dim):
                pts[i, d] += t * (centroid[d] - pts[i, d])


@njit(cache=True)
def _polygon_weights_core(normals, offsets, centroid, pts):
    npts = pts.shape[0]
    n = normals.shape[0]
    hmin = np.empty(npts)
    work = pts.copy()
    _nudge_core(work, normals, offsets, centroid, hmin)

    omega = np.empty((npts, n))
    grad = np.empty((npts, n, 2))
    u = np.empty((n, 2))
    w = np.empty(n)
    gw = np.empty((n, 2))
    for i in range(npts):
        for e in range(n):
            h = offsets[e] - normals[e, 0] * work[i, 0] - normals[e, 1] * work[i, 1]
            u[e, 0] = normals[e, 0] / h
            u[e, 1] = normals[e, 1] / h
        wsum = 0.0
        gsx = 0.0
        gsy = 0.0
        for v in range(n):
            ep = v - 1 if v > 0 else n - 1
            wv = u[ep, 0] * u[v, 1] - u[ep, 1] * u[v, 0]
            w[v] = wv
            gw[v, 0] = (u[ep, 0] + u[v, 0]) * wv
            gw[v, 1] = (u[ep, 1] + u[v, 1]) * wv
            wsum += wv
            gsx += gw[v, 0]
            gsy += gw[v, 1]
        for v in range(n):
            ov = w[v] / wsum
            omega[i, v] = ov
            grad[i, v, 0] = (gw[v, 0] - ov * gsx) / wsum
            grad[i, v, 1] = (gw[v, 1] - ov * gsy) / wsum
    return omega, grad, hmin


def polygon_weights(normals, offsets, centroid, pts):
    return _polygon_weights_core(normals, offsets, centroid, _prep(pts, 2))


@njit(cache=True)
def _polytope3_weights_core(normals, offsets, centroid, tri_vertex, tri_faces,
                            nverts, pts):
    npts = pts.shape[0]
    nf = normals.shape[0]
    ntri = tri_vertex.shape[0]
    hmin = np.empty(npts)
    work = pts.copy()
    _nudge_core(work, normals, offsets, centroid, hmin)

    omega = np.zeros((npts, nverts))
    grad = np.zeros((npts, nverts, 3))
    u = np.empty((nf, 3))
    for i in range(npts):
        for f in range(nf):
            h = offsets[f]
            for d in range(3):
                h -= normals[f, d] * work[i, d]
            for d in range(3):
                u[f, d] = normals[f, d] / h
        for v in range(nverts):
            omega[i, v] = 0.0
            grad[i, v, 0] = 0.0
            grad[i, v, 1] = 0.0
            grad[i, v, 2] = 0.0
        wsum = 0.0
        gsx = 0.0
        gsy = 0.0
        gsz = 0.0
        for t in range(ntri):
            fa = tri_faces[t, 0]
            fb = tri_faces[t, 1]
            fc = tri_faces[t, 2]
            det = (u[fa, 0] * (u[fb, 1] * u[fc, 2] - u[fb, 2] * u[fc, 1])
                   - u[fa, 1] * (u[fb, 0] * u[fc, 2] - u[fb, 2] * u[fc, 0])
                   + u[fa, 2] * (u[fb, 0] * u[fc, 1] - u[fb, 1] * u[fc, 0]))
            v = tri_vertex[t]
            omega[i, v] += det
            gx = (u[fa, 0] + u[fb, 0] + u[fc, 0]) * det
            gy = (u[fa, 1] + u[fb, 1] + u[fc, 1]) * det
            gz = (u[fa, 2] + u[fb, 2] + u[fc, 2]) * det
            grad[i, v, 0] += gx
            grad[i, v, 1] += gy
            grad[i, v, 2] += gz
            wsum += det
            gsx += gx
            gsy += gy
            gsz += gz
        for v in range(nverts):
            ov = omega[i, v] / wsum
            omega[i, v] = ov
            grad[i, v, 0] = (grad[i, v, 0] - ov * gsx) / wsum
            grad[i, v, 1] = (grad[i, v, 1] - ov * gsy) / wsum
            grad[i, v, 2] = (grad[i, v, 2] - ov * gsz) / wsum
    return omega, grad, hmin


def polytope3_weights(normals, offsets, centroid, tri_vertex, tri_faces, nverts, pts):
    return _polytope3_weights_core(normals, offsets, centroid, tri_vertex,
                                   tri_faces, nverts, _prep(pts, 3))


@njit(cache=True)
def _project_polygon_core(vertices, normals, offsets, pts):
    npts = pts.shape[0]
    n = vertices.shape[0]
    out = pts.copy()
    for i in range(npts):
        inside = True
        for e in range(n):
            h = offsets[e] - normals[e, 0] * pts[i, 0] - normals[e, 1] * pts[i, 1]
            if h < -PROJECT_TOL:
                inside = False
                break
        if inside:
            continue
        best = np.inf
        qx = 0.0
        qy = 0.0
        for e in range(n):
            e1 = e + 1 if e + 1 < n else 0
            dx = vertices[e1, 0] - vertices[e, 0]
            dy = vertices[e1, 1] - vertices[e, 1]
            t = ((pts[i, 0] - vertices[e, 0]) * dx
                 + (pts[i, 1] - vertices[e, 1]) * dy) / (dx * dx + dy * dy)
            t = min(max(t, 0.0), 1.0)
            cx = vertices[e, 0] + t * dx
            cy = vertices[e, 1] + t * dy
            d2 = (cx - pts[i, 0]) ** 2 + (cy - pts[i, 1]) ** 2
            if d2 < best:
                best = d2
                qx = cx
                qy = cy
        out[i, 0] = qx
        out[i, 1] = qy
    return out


def project_polygon(vertices, normals, offsets, pts):
    return _project_polygon_core(vertices, normals, offsets, _prep(pts, 2))


@njit(cache=True)
def _project_polytope3_core(vertices, face_normals, face_offsets, face_loops,
                            face_edge_normals, edges, pts):
    npts = pts.shape[0]
    nf = face_normals.shape[0]
    ne = edges.shape[0]
    max_deg = face_loops.shape[1]
    out = pts.copy()
    for i in range(npts):
        inside = True
        for f in range(nf):
            h = face_offsets[f]
            for d in range(3):
                h -= face_normals[f, d] * pts[i, d]
            if h < -PROJECT_TOL:
                inside = False
                break
        if inside:
            continue
        best = np.inf
        bq = np.zeros(3)
        for f in range(nf):
            s = -face_offsets[f]
            for d in range(3):
                s += face_normals[f, d] * pts[i, d]
            q0 = pts[i, 0] - s * face_normals[f, 0]
            q1 = pts[i, 1] - s * face_normals[f, 1]
            q2 = pts[i, 2] - s * face_normals[f, 2]
            ok = True
            for k in range(max_deg):
                vidx = face_loops[f, k]
                if vidx < 0:
                    break
                side = ((q0 - vertices[vidx, 0]) * face_edge_normals[f, k, 0]
                        + (q1 - vertices[vidx, 1]) * face_edge_normals[f, k, 1]
                        + (q2 - vertices[vidx, 2]) * face_edge_normals[f, k, 2])
                if side > 1e-12:
                    ok = False
                    break
            if ok and s * s < best:
                best = s * s
                bq[0] = q0
                bq[1] = q1
                bq[2] = q2
        for e in range(ne):
            a = edges[e, 0]
            b = edges[e, 1]
            dx = vertices[b, 0] - vertices[a, 0]
            dy = vertices[b, 1] - vertices[a, 1]
            dz = vertices[b, 2] - vertices[a, 2]
            t = ((pts[i, 0] - vertices[a, 0]) * dx
                 + (pts[i, 1] - vertices[a, 1]) * dy
                 + (pts[i, 2] - vertices[a, 2]) * dz) / (dx * dx + dy * dy + dz * dz)
            t = min(max(t, 0.0), 1.0)
            cx = vertices[a, 0] + t * dx
            cy = vertices[a, 1] + t * dy
            cz = vertices[a, 2] + t * dz
            d2 = ((cx - pts[i, 0]) ** 2 + (cy - pts[i, 1]) ** 2
                  + (cz - pts[i, 2]) ** 2)
            if d2 < best:
                best = d2
                bq[0] = cx
                bq[1] = cy
                bq[2] = cz
        out[i, 0] = bq[0]
        out[i, 1] = bq[1]
        out[i, 2] = bq[2]
    return out


def project_polytope3(vertices, face_normals, face_offsets, face_loops,
                      face_edge_normals, edges, pts):
    return _project_polytope3_core(vertices, face_normals, face_offsets,
                                   face_loops, face_edge_normals, edges,
                                   _prep(pts, 3))


@njit(cache=True)
def _froelich_core(bvec, js, a):
    npts = bvec.shape[0]
    jp = np.empty((npts, 2))
    djp = np.empty((npts, 2, 2))
    for i in range(npts):
        bx = bvec[i, 0]
        by = bvec[i, 1]
        b = np.sqrt(bx * bx + by * by)
        denom = js + a * b
        sec = js * a / denom
        tan = a * js * js / (denom * denom)
        jp[i, 0] = sec * bx
        jp[i, 1] = sec * by
        if b > 0.0:
            hx = bx / b
            hy = by / b
            dd = tan - sec
            djp[i, 0, 0] = sec + dd * hx * hx
            djp[i, 0, 1] = dd * hx * hy
            djp[i, 1, 0] = dd * hy * hx
            djp[i, 1, 1] = sec + dd * hy * hy
        else:
            djp[i, 0, 0] = a
            djp[i, 0, 1] = 0.0
            djp[i, 1, 0] = 0.0
            djp[i, 1, 1] = a
    return jp, djp


def froelich_polarization(bvec, js, a):
    return _froelich_core(_prep(bvec, 2), js, a)


@njit(cache=True)
def _p1_element_b_core(a_elem, bcoef, ccoef, inv2a):
    ne = a_elem.shape[0]
    bf = np.empty((ne, 2))
    for e in range(ne):
        bx = 0.0
        by = 0.0
        for i in range(3):
            bx += a_elem[e, i] * ccoef[e, i]
            by -= a_elem[e, i] * bcoef[e, i]
        bf[e, 0] = bx * inv2a[e]
        bf[e, 1] = by * inv2a[e]
    return bf


def p1_element_b(a_elem, bcoef, ccoef, inv2a):
    return _p1_element_b_core(a_elem, bcoef, ccoef, inv2a)


@njit(cache=True)
def _p1_element_system_core(bcoef, ccoef, area, bfield, jp, djp, jz, nu0, load_sign):
    ne = bcoef.shape[0]
    relem = np.empty((ne, 3))
    kelem = np.empty((ne, 3, 3))
    for e in range(ne):
        d0 = bfield[e, 0] - jp[e, 0]
        d1 = bfield[e, 1] - jp[e, 1]
        load = load_sign * jz[e] * area[e] / 3.0
        m00 = 1.0 - djp[e, 0, 0]
        m01 = -djp[e, 0, 1]
        m10 = -djp[e, 1, 0]
        m11 = 1.0 - djp[e, 1, 1]
        scale = nu0 / (4.0 * area[e])
        for i in range(3):
            gi0 = ccoef[e, i]
            gi1 = -bcoef[e, i]
            relem[e, i] = 0.5 * nu0 * (d0 * gi0 + d1 * gi1) - load
            for j in range(3):
                gj0 = ccoef[e, j]
                gj1 = -bcoef[e, j]
                kelem[e, i, j] = scale * (gi0 * (m00 * gj0 + m01 * gj1)
                                          + gi1 * (m10 * gj0 + m11 * gj1))
    return relem, kelem


def p1_element_system(bcoef, ccoef, area, bfield, jp, djp, jz, nu0, load_sign):
    return _p1_element_system_core(bcoef, ccoef, area, bfield, jp, djp, jz,
                                   nu0, load_sign)
