"""Exit codes, artifacts, and output of the command line driver."""

import json
import os

import numpy as np

from mmtopo import cli


def write_config(tmp_path, **overrides):
    cfg = {
        "mesh": {"target_element_count": 150},
        "domains": ["hexadecagon"],
        "optimizer": {"max_iterations": 2},
        "sweep": {"gamma_min": 0.0, "gamma_max": 1.0, "gamma_step": 1.0},
        "output": {"directory": str(tmp_path / "out"), "write_vtk": False},
    }
    for key, val in overrides.items():
        if isinstance(val, dict):
            cfg.setdefault(key, {}).update(val)
        else:
            cfg[key] = val
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_no_arguments_is_usage_error(capsys):
    assert cli.main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert cli.main(["refine"]) == 1
    assert "usage" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    out = capsys.readouterr().out
    assert "optimize" in out and "sweep" in out
    assert '"geometry"' in out  # config schema shown in help


def test_mesh_info(capsys):
    assert cli.main(["mesh-info"]) == 0
    out = capsys.readouterr().out
    assert "elements" in out and "flux probes" in out


def test_optimize_run(tmp_path, capsys):
    config = write_config(tmp_path)
    assert cli.main(["optimize", "--config", config, "--gamma", "1.0"]) == 0
    out = capsys.readouterr().out
    assert "termination" in out and "phi_plus" in out
    outdir = tmp_path / "out"
    names = os.listdir(outdir)
    assert any(n.endswith("_trace.csv") for n in names)
    assert any(n.endswith("_design.npz") for n in names)


def test_optimize_bad_gamma_is_usage_error(tmp_path, capsys):
    config = write_config(tmp_path)
    assert cli.main(["optimize", "--config", config, "--gamma", "2.0"]) == 1
    assert "error" in capsys.readouterr().err


def test_optimize_missing_config_file(capsys):
    assert cli.main(["optimize", "--config", "/nonexistent.json"]) == 1


def test_optimize_invalid_config_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{]")
    assert cli.main(["optimize", "--config", str(path)]) == 1


def test_optimize_solver_failure_exit_code(tmp_path, capsys):
    config = write_config(
        tmp_path, domains=["recursive"],
        optimizer={"max_iterations": 2, "newton_max_iter": 0,
                   "init": "random", "seed": 3})
    assert cli.main(["optimize", "--config", config]) == 2
    assert "solver_failure" in capsys.readouterr().out


def test_export_round_trip(tmp_path, capsys):
    config = write_config(tmp_path)
    assert cli.main(["optimize", "--config", config, "--gamma", "0.5"]) == 0
    capsys.readouterr()
    design = next(str(p) for p in (tmp_path / "out").iterdir()
                  if str(p).endswith("_design.npz"))
    out_vtk = str(tmp_path / "view.vtk")
    assert cli.main(["export", "--design", design, "--output", out_vtk,
                     "--config", config]) == 0
    with open(out_vtk) as fh:
        head = fh.readline()
    assert head.startswith("# vtk DataFile Version")


def test_sweep_end_to_end(tmp_path, capsys):
    config = write_config(tmp_path)
    assert cli.main(["sweep", "--config", config]) == 0
    out = capsys.readouterr().out
    assert "best hexadecagon" in out
    records = tmp_path / "out" / "records.csv"
    assert records.exists()
    with open(records) as fh:
        lines = fh.readlines()
    assert lines[0].strip() == "gamma,domain,phi_plus,phi_minus,sd0," \
                               "iterations,termination"
    assert len(lines) == 3


def test_check_gradients_sampled(capsys):
    code = cli.main(["check-gradients", "--elements", "40",
                     "--sample", "6", "--seed", "2"])
    out = capsys.readouterr().out
    assert code == 0, out
    assert "linear materials" in out and "nonlinear steel" in out
    assert "PASS" in out
