import json
import math
from pathlib import Path

import pytest
import yaml

from ppcpalm.cli import ConfigError, load_config, main, run_experiment


def _nnd_config(tmp_path, seed=5):
    return {
        "mode": "nnd",
        "output_path": str(tmp_path / "nnd"),
        "cluster": {
            "lambda_parent": 1.0 / math.pi,
            "mu": 10.0,
            "kernel": {"type": "thomas", "sigma2": 1.0},
        },
        "network": {"p": 0.5, "beta": 4.0, "noise": 0.0},
        "r_grid": [0.2, 0.5, 1.0],
        "sim": {"window_radius": 6.0, "replications": 2000, "seed": seed},
    }


def _write(tmp_path, doc, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_missing_field_exit_code_and_message(tmp_path, capsys):
    doc = _nnd_config(tmp_path)
    del doc["cluster"]["mu"]
    rc = main(["run", _write(tmp_path, doc)])
    assert rc == 2
    assert "cluster.mu" in capsys.readouterr().err


def test_bad_mode_rejected(tmp_path, capsys):
    doc = _nnd_config(tmp_path)
    doc["mode"] = "percolation"
    rc = main(["run", _write(tmp_path, doc)])
    assert rc == 2
    assert "mode" in capsys.readouterr().err


def test_bad_kernel_rejected(tmp_path, capsys):
    doc = _nnd_config(tmp_path)
    doc["cluster"]["kernel"] = {"type": "cauchy"}
    rc = main(["run", _write(tmp_path, doc)])
    assert rc == 2
    assert "kernel" in capsys.readouterr().err


def test_unsorted_grid_rejected(tmp_path):
    doc = _nnd_config(tmp_path)
    doc["r_grid"] = [1.0, 0.5]
    with pytest.raises(ConfigError):
        run_experiment(doc)


def test_missing_config_file(capsys):
    assert main(["run", "/nonexistent/config.yaml"]) == 2


def test_nnd_run_outputs(tmp_path):
    doc = _nnd_config(tmp_path)
    outputs = run_experiment(doc)
    for path in outputs:
        assert Path(path).exists()
    csv = Path(f"{doc['output_path']}.csv").read_text()
    header = csv.splitlines()[0].split(",")
    assert header == ["r", "analytic", "mc_mean", "mc_ci_low", "mc_ci_high",
                      "n", "n_censored"]
    assert len(csv.splitlines()) == 1 + len(doc["r_grid"])


def test_byte_identical_reruns(tmp_path):
    doc = _nnd_config(tmp_path)
    run_experiment(doc)
    first = Path(f"{doc['output_path']}.csv").read_bytes()
    run_experiment(doc)
    assert Path(f"{doc['output_path']}.csv").read_bytes() == first


def test_seed_changes_mc_columns(tmp_path):
    doc = _nnd_config(tmp_path, seed=5)
    run_experiment(doc)
    first = Path(f"{doc['output_path']}.csv").read_text()
    run_experiment(_nnd_config(tmp_path, seed=6))
    assert Path(f"{doc['output_path']}.csv").read_text() != first


def test_manifest_reruns_identically(tmp_path):
    doc = _nnd_config(tmp_path)
    run_experiment(doc)
    csv_path = Path(f"{doc['output_path']}.csv")
    first = csv_path.read_bytes()
    manifest = f"{doc['output_path']}.manifest.json"
    assert json.loads(Path(manifest).read_text())["config"] == doc
    csv_path.unlink()
    rc = main(["run", manifest])
    assert rc == 0
    assert csv_path.read_bytes() == first


def test_palm_verify_mode(tmp_path):
    doc = {
        "mode": "palm-verify",
        "output_path": str(tmp_path / "exchange"),
        "cluster": {
            "lambda_parent": 1.0 / math.pi,
            "mu": 10.0,
            "kernel": {"type": "thomas", "sigma2": 1.0},
        },
        "network": {"p": 0.5, "beta": 4.0, "noise": 0.0},
        "sim": {"window_radius": 8.0, "replications": 1500, "seed": 12},
    }
    run_experiment(doc)
    lines = Path(f"{doc['output_path']}.csv").read_text().splitlines()
    assert lines[0].startswith("functional,")
    assert len(lines) == 4
    # all three canonical functionals should have overlapping CIs
    assert all(line.endswith(",1") for line in lines[1:])


def test_censoring_failure_exit_code(tmp_path, capsys):
    doc = _nnd_config(tmp_path)
    doc["cluster"]["lambda_parent"] = 1e-4
    doc["cluster"]["mu"] = 0.05
    doc["cluster"]["kernel"] = {"type": "thomas", "sigma2": 400.0}
    doc["sim"]["window_radius"] = 0.3
    rc = main(["run", _write(tmp_path, doc)])
    assert rc == 3


def test_load_config_json(tmp_path):
    doc = _nnd_config(tmp_path)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    assert load_config(path) == doc
