"""Domain trees, hybridization score, sweep orchestration."""

import json
import os

import numpy as np
import pytest

from mmtopo import exports
from mmtopo import study
from mmtopo import tree as itree
from mmtopo.errors import (InvalidNormalization, InvalidParameters,
                           IoFailure)


def quick_config(tmp_path, **overrides):
    base = {
        "mesh": {"target_element_count": 150},
        "domains": ["hexadecagon"],
        "optimizer": {"max_iterations": 2, "newton_tol": 1e-8},
        "sweep": {"gamma_min": 0.0, "gamma_max": 1.0, "gamma_step": 1.0},
        "output": {"directory": str(tmp_path / "out"), "write_vtk": False},
    }
    for key, val in overrides.items():
        if isinstance(val, dict):
            base.setdefault(key, {}).update(val)
        else:
            base[key] = val
    return study.StudyConfig.from_dict(base)


# ---------------------------------------------------------------------------
# domain trees


def test_hexadecagon_tree_layout():
    tree = study.domain_tree("hexadecagon")
    assert len(tree.leaf_labels) == 16
    assert tree.nodes[()].polytope.vertex_count == 16
    assert tree.total_dimension == 2
    names = [m.name for m in tree.leaf_materials]
    assert names[:3] == ["pm_000", "pm_030", "pm_060"]
    assert names[12:] == ["conductor_pos", "conductor_neg", "steel", "air"]


def test_diamond_tree_layout():
    tree = study.domain_tree("diamond")
    poly = tree.nodes[()].polytope
    assert poly.vertex_count == 16
    assert poly.dim == 3
    assert len(tree.leaf_labels) == 16
    # equator carries the sources, apexes carry steel (top) and air (bottom)
    assert tree.nodes[(15,)].material.name == "steel"
    assert tree.nodes[(16,)].material.name == "air"
    assert poly.vertices[14, 2] > 0 and poly.vertices[15, 2] < 0
    for k in range(12):
        assert tree.nodes[(k + 1,)].material.name == f"pm_{30 * k:03d}"


def test_recursive_tree_dimension():
    tree = study.domain_tree("recursive")
    assert tree.total_dimension == 6


def test_unknown_domain_rejected():
    with pytest.raises(InvalidParameters):
        study.domain_tree("pentagon")


# ---------------------------------------------------------------------------
# sd0


def test_sd0_reference_triples():
    # flux pairs (mWb/m) and scores from the reference rotor study
    assert abs(100 * study.sd0(12.1, 0.4, 23.1) - 50.6) < 0.1
    assert abs(100 * study.sd0(-0.6, -8.1, 23.1) - 32.5) < 0.1
    assert abs(100 * study.sd0(-0.3, -6.5, 23.1) - 26.8) < 0.1


def test_sd0_symmetries():
    rng = np.random.default_rng(2)
    for x, y in rng.normal(size=(50, 2)):
        s = study.sd0(x, y, 3.0)
        assert s == study.sd0(y, x, 3.0)
        assert s == study.sd0(-x, -y, 3.0)


def test_sd0_extremes():
    assert study.sd0(23.1, 0.0, 23.1) == 1.0
    assert study.sd0(0.0, -23.1, 23.1) == 1.0
    for x in (0.0, 1.7, -5.0):
        assert study.sd0(x, x, 9.0) == 0.0
    with pytest.raises(InvalidNormalization):
        study.sd0(1.0, 2.0, 0.0)
    with pytest.raises(InvalidNormalization):
        study.sd0(1.0, 2.0, -4.0)


# ---------------------------------------------------------------------------
# configuration


def test_gamma_grid():
    cfg = study.StudyConfig.from_dict(
        {"sweep": {"gamma_min": -1.0, "gamma_max": 1.0, "gamma_step": 0.5}})
    assert study.gamma_values(cfg) == [-1.0, -0.5, 0.0, 0.5, 1.0]
    cfg = study.StudyConfig.from_dict(
        {"sweep": {"gamma_min": -1.0, "gamma_max": 1.0, "gamma_step": 0.1}})
    vals = study.gamma_values(cfg)
    assert len(vals) == 21 and 0.0 in vals and vals[-1] == 1.0
    cfg = study.StudyConfig.from_dict(
        {"sweep": {"gamma_min": 0.5, "gamma_max": -0.5, "gamma_step": 0.1}})
    assert study.gamma_values(cfg) == []


def test_config_validation():
    with pytest.raises(InvalidParameters):
        study.StudyConfig.from_dict({"turbo": {}})
    with pytest.raises(InvalidParameters):
        study.StudyConfig.from_dict({"sweep": {"gamma_step": 0.0}})
    with pytest.raises(InvalidParameters):
        study.StudyConfig.from_dict({"sweep": {"gamma_max": 1.5}})
    with pytest.raises(InvalidParameters):
        study.StudyConfig.from_dict({"domains": ["recursive", "cube"]})
    with pytest.raises(InvalidParameters):
        study.StudyConfig.from_dict({"optimizer": {"move_limit": -1}})


def test_config_load_errors(tmp_path):
    with pytest.raises(IoFailure):
        study.StudyConfig.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidParameters):
        study.StudyConfig.load(bad)


def test_config_load_roundtrip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "mesh": {"target_element_count": 321},
        "sweep": {"gamma_step": 0.25},
    }))
    cfg = study.StudyConfig.load(path)
    assert cfg.mesh["target_element_count"] == 321
    assert cfg.gamma_step == 0.25
    assert cfg.gamma_min == -1.0  # defaults fill the rest


def test_random_design_is_strictly_interior():
    tree = study.domain_tree("recursive")
    rho = study.random_design(tree, n=40, seed=7)
    for label in tree.internal_labels:
        poly = tree.nodes[label].polytope
        assert poly.contains(rho[label], tol=0.0)
        assert rho[label].shape == (40, tree.dims[label])


# ---------------------------------------------------------------------------
# single runs and sweeps


def test_run_single_writes_artifacts(tmp_path):
    cfg = quick_config(tmp_path, domains=["recursive"],
                       output={"directory": str(tmp_path / "out"),
                               "write_vtk": True})
    record = study.run_single(cfg, "recursive", 1.0)
    tag = "recursive_gamma_+1.000000"
    for suffix in ("_trace.csv", "_design.npz", "_record.json", ".vtk"):
        assert os.path.exists(tmp_path / "out" / f"{tag}{suffix}")
    assert record["termination"] in ("max_iter", "stagnation")
    assert record["iterations"] == 2
    assert np.isfinite(record["phi_plus"])

    domain, gamma, radius, raw = study.load_design(record["design_path"])
    assert domain == "recursive" and gamma == 1.0 and radius > 0
    tree = study.domain_tree("recursive")
    assert set(raw) == set(tree.internal_labels)


def test_gamma_sweep_assembles_sorted_records(tmp_path):
    cfg = quick_config(tmp_path,
                       sweep={"gamma_min": -1.0, "gamma_max": 1.0,
                              "gamma_step": 1.0})
    records = study.gamma_sweep(cfg)
    assert [r.gamma for r in records] == [-1.0, 0.0, 1.0]
    assert all(r.domain == "hexadecagon" for r in records)
    assert all(np.isfinite(r.sd0) for r in records)
    csv_path = os.path.join(cfg.output_dir, "records.csv")
    rows = exports.read_records_csv(csv_path)
    for rec, row in zip(records, rows):
        assert row["gamma"] == rec.gamma
        assert row["phi_plus"] == rec.phi_plus  # full precision round trip
        assert row["sd0"] == rec.sd0
        assert row["termination"] == rec.termination


def test_gamma_sweep_resume_changes_nothing(tmp_path):
    cfg = quick_config(tmp_path)
    study.gamma_sweep(cfg)
    snapshot = {}
    for name in os.listdir(cfg.output_dir):
        with open(os.path.join(cfg.output_dir, name), "rb") as fh:
            snapshot[name] = fh.read()
    records = study.gamma_sweep(cfg)  # resumed: no run executes again
    assert len(records) == 2
    for name, blob in snapshot.items():
        with open(os.path.join(cfg.output_dir, name), "rb") as fh:
            assert fh.read() == blob, f"{name} changed on resume"


def test_gamma_sweep_empty_range(tmp_path):
    cfg = quick_config(tmp_path, sweep={"gamma_min": 0.5, "gamma_max": -0.5})
    assert study.gamma_sweep(cfg) == []
    assert not os.path.exists(os.path.join(cfg.output_dir, "records.csv"))


def test_gamma_sweep_records_solver_failure(tmp_path):
    cfg = quick_config(tmp_path, domains=["recursive"],
                       optimizer={"max_iterations": 2, "newton_max_iter": 0,
                                  "init": "random", "seed": 3},
                       sweep={"gamma_min": 1.0, "gamma_max": 1.0,
                              "gamma_step": 1.0})
    records = study.gamma_sweep(cfg)
    assert len(records) == 1
    assert records[0].termination == "solver_failure"
    assert np.isnan(records[0].sd0) and np.isnan(records[0].phi_plus)
    rows = exports.read_records_csv(os.path.join(cfg.output_dir,
                                                 "records.csv"))
    assert np.isnan(rows[0]["sd0"])


def test_best_records_selects_max_sd0():
    mk = lambda d, g, s: study.ParetoRecord(g, d, 1.0, 0.0, s, 1, "max_iter",
                                            "x.npz")
    records = [mk("a", 0.0, 0.2), mk("a", 0.5, 0.9),
               mk("b", 0.0, float("nan")), mk("b", 0.5, 0.1)]
    best = study.best_records(records)
    assert best["a"].gamma == 0.5 and best["b"].sd0 == 0.1
