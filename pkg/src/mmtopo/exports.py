"""Artifact writers: legacy ASCII VTK fields and sweep record CSV."""

import csv

import numpy as np

from . import tree as itree
from .errors import IoFailure
from .materials import default_catalogue

RECORD_COLUMNS = ("gamma", "domain", "phi_plus", "phi_minus", "sd0",
                  "iterations", "termination")


def _f(x):
    return f"{float(x):.17e}"


def _dominant_indices(tree, filtered):
    """Per-element dominant material as catalogue indices when the tree's
    leaf names all come from the default catalogue, else leaf indices."""
    leaf_idx = itree.dominant_leaf(tree, filtered)
    cat = default_catalogue()
    names = [m.name for m in tree.leaf_materials]
    if set(names) <= set(cat.names):
        lut = np.array([cat.index(name) for name in names])
        return lut[leaf_idx]
    return leaf_idx


def export_vtk(mesh, tree, field, path, state=None):
    """Legacy ASCII VTK unstructured grid with per-element design data.

    Cell data: region id, dominant material index, blended current density
    and |Jp| (at the state's flux density when a state is given, else at
    B = 0), plus every design coordinate scattered over the full element
    list with zeros on the airgap. Point data: vector potential.
    """
    de = mesh.design_elements
    ne = mesh.n_elements
    b = state.b[de] if state is not None else np.zeros((de.size, 2))
    val = itree.eval(tree, field.filtered, b)

    current = np.zeros(ne)
    current[de] = val.current_density
    jp_mag = np.zeros(ne)
    jp_mag[de] = np.linalg.norm(val.polarization, axis=1)
    dominant = np.full(ne, -1, dtype=np.int64)
    dominant[de] = _dominant_indices(tree, field.filtered)

    design_arrays = []
    for label in tree.internal_labels:
        coords = field.filtered[label]
        for d in range(coords.shape[1]):
            full = np.zeros(ne)
            full[de] = coords[:, d]
            design_arrays.append((f"design_{itree.format_label(label)}_{d}",
                                  full))

    lines = []
    lines.append("# vtk DataFile Version 3.0")
    lines.append("rotor pole design field")
    lines.append("ASCII")
    lines.append("DATASET UNSTRUCTURED_GRID")
    lines.append(f"POINTS {mesh.n_nodes} double")
    for x, y in mesh.nodes:
        lines.append(f"{_f(x)} {_f(y)} {_f(0.0)}")
    lines.append(f"CELLS {ne} {4 * ne}")
    for tri in mesh.triangles:
        lines.append(f"3 {tri[0]} {tri[1]} {tri[2]}")
    lines.append(f"CELL_TYPES {ne}")
    lines.extend(["5"] * ne)

    lines.append(f"CELL_DATA {ne}")
    lines.append("SCALARS region int 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(int(r)) for r in mesh.element_region)
    lines.append("SCALARS dominant_material int 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(int(i)) for i in dominant)
    for name, arr in (("current_density", current),
                      ("polarization_magnitude", jp_mag)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_f(v) for v in arr)
    for name, arr in design_arrays:
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_f(v) for v in arr)

    if state is not None:
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        lines.append("SCALARS vector_potential double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_f(v) for v in state.a)

    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as e:
        raise IoFailure(f"cannot write VTK file {path}: {e}") from e


def export_csv(records, path):
    """Sweep records with full-precision scientific floats."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RECORD_COLUMNS)
            for r in records:
                w.writerow([_f(r.gamma), r.domain, _f(r.phi_plus),
                            _f(r.phi_minus), _f(r.sd0), int(r.iterations),
                            r.termination])
    except OSError as e:
        raise IoFailure(f"cannot write CSV file {path}: {e}") from e


def read_records_csv(path):
    """Rows back as dicts with floats restored to full precision."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != RECORD_COLUMNS:
                raise IoFailure(f"unexpected CSV header in {path}: {header}")
            rows = []
            for row in reader:
                rows.append({
                    "gamma": float(row[0]), "domain": row[1],
                    "phi_plus": float(row[2]), "phi_minus": float(row[3]),
                    "sd0": float(row[4]), "iterations": int(row[5]),
                    "termination": row[6]})
            return rows
    except OSError as e:
        raise IoFailure(f"cannot read CSV file {path}: {e}") from e
