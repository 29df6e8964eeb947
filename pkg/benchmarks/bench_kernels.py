"""Benchmark the numba kernel builds against their pure-numpy twins.

Both implementations are imported directly (bypassing the MMTOPO_NUMBA
dispatch) so a single process can time them side by side. The numba build
is warmed up first so JIT compilation does not pollute the numbers.

Run:  python3 benchmarks/bench_kernels.py [--points 20000] [--repeats 7]
"""

import argparse
import statistics
import time

import numpy as np

from mmtopo import polytope
from mmtopo.kernels import numba_impl, numpy_impl
from mmtopo.materials import steel_model


def _time(fn, args, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best.append(time.perf_counter() - t0)
    return statistics.median(best)


def _interior_points(poly, n, seed):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(poly.vertex_count), size=n)
    return np.ascontiguousarray(w @ poly.vertices)


def _exterior_points(poly, n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, poly.dim)) * 2.0
    return np.ascontiguousarray(pts)


def build_cases(n_points, seed=0):
    gon = polytope.regular_polygon(16)
    dia = polytope.diamond()
    g2 = gon._geom
    g3 = dia._geom

    p2 = _interior_points(gon, n_points, seed)
    p3 = _interior_points(dia, n_points, seed + 1)
    q2 = _exterior_points(gon, n_points, seed + 2)
    q3 = _exterior_points(dia, n_points, seed + 3)

    bvec = np.random.default_rng(seed + 4).normal(size=(n_points, 2))
    a_elem = np.random.default_rng(seed + 5).normal(size=(n_points, 3))
    bcoef = np.random.default_rng(seed + 6).normal(size=(n_points, 3))
    ccoef = np.random.default_rng(seed + 7).normal(size=(n_points, 3))
    area = np.abs(np.random.default_rng(seed + 8).normal(size=n_points)) + 0.1
    steel = steel_model()
    jp, djp = numpy_impl.froelich_polarization(bvec, steel.js, steel.a)
    jz = np.random.default_rng(seed + 9).normal(size=n_points)

    return [
        ("polygon_weights", "polygon_weights",
         (g2["normals"], g2["offsets"], g2["centroid"], p2)),
        ("polytope3_weights", "polytope3_weights",
         (g3["normals"], g3["offsets"], g3["centroid"],
          g3["tri_vertex"], g3["tri_faces"], dia.vertex_count, p3)),
        ("project_polygon", "project_polygon",
         (gon.vertices, g2["normals"], g2["offsets"], q2)),
        ("project_polytope3", "project_polytope3",
         (dia.vertices, g3["normals"], g3["offsets"], g3["face_loops"],
          g3["face_edge_normals"], g3["edges"], q3)),
        ("froelich_polarization", "froelich_polarization",
         (bvec, steel.js, steel.a)),
        ("p1_element_b", "p1_element_b",
         (a_elem, bcoef, ccoef, 1.0 / (2.0 * area))),
        ("p1_element_system", "p1_element_system",
         (bcoef, ccoef, area, bvec, jp, djp, jz, 1.0 / (4e-7 * np.pi), 1.0)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000,
                    help="batch size per kernel call")
    ap.add_argument("--repeats", type=int, default=7,
                    help="timed repetitions (median reported)")
    args = ap.parse_args()

    cases = build_cases(args.points)

    # warm up the JIT before timing anything
    for name, attr, call_args in cases:
        getattr(numba_impl, attr)(*call_args)

    width = max(len(name) for name, _, _ in cases)
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  speedup")
    for name, attr, call_args in cases:
        t_np = _time(getattr(numpy_impl, attr), call_args, args.repeats)
        t_nb = _time(getattr(numba_impl, attr), call_args, args.repeats)
        print(f"{name:<{width}}  {t_np * 1e3:>8.2f}ms  {t_nb * 1e3:>8.2f}ms  "
              f"{t_np / t_nb:>6.2f}x")


if __name__ == "__main__":
    main()
