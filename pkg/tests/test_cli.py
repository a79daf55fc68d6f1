import json
import math
import sys
import os

import pandas as pd
import pytest
import yaml

# Ensure src module can be imported
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.cli.config import build_config, load_config
from src.cli.main import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from src.utils.config_loader import get_config_dir
from src.utils.errors import ConfigError, DimensionError

CONFIG_DIR = get_config_dir()

ZERO_C2 = [[["0", "0"], ["0", "0"]], [["0", "0"], ["0", "0"]]]


def write_config(tmp_path, document, name="run.json"):
    path = tmp_path / name
    if name.endswith((".yaml", ".yml")):
        path.write_text(yaml.safe_dump(document), encoding="utf-8")
    else:
        path.write_text(json.dumps(document), encoding="utf-8")
    return path


def run_cli(subcommand, config, out):
    return main([subcommand, "--config", str(config), "--out", str(out)])


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def test_validate_rigid_body(tmp_path):
    out = tmp_path / "validate"
    assert run_cli("validate", CONFIG_DIR / "so3_validate.json", out) == EXIT_OK

    report = read_json(out / "validate.json")
    assert report["almost_lie"]["passed"]
    assert report["lie"]["passed"]
    assert report["catalog"] == {"name": "so3", "expected_lie": True}
    assert report["k"] == 3


def test_validate_non_lie_algebra(tmp_path):
    out = tmp_path / "validate"
    assert run_cli("validate", CONFIG_DIR / "skew_nonlie3_validate.json", out) == EXIT_OK
    report = read_json(out / "validate.json")
    assert report["almost_lie"]["passed"]
    assert not report["lie"]["passed"]


def test_conjugate_on_the_sphere(tmp_path):
    out = tmp_path / "conjugate"
    assert run_cli("conjugate", CONFIG_DIR / "sphere_conjugate.json", out) == EXIT_OK

    report = read_json(out / "conjugate.json")
    assert len(report["conjugate_times"]) == 1
    assert abs(report["conjugate_times"][0]["t"] - math.pi) <= 1e-3
    assert report["conjugate_times"][0]["multiplicity"] == 1


def test_secondvar_flat_line(tmp_path):
    out = tmp_path / "secondvar"
    assert run_cli("secondvar", CONFIG_DIR / "flat_secondvar.json", out) == EXIT_OK

    metadata = read_json(out / "second_variation_meta.json")
    assert metadata["null_dimension"] == 0
    assert metadata["morse_index"] == 0
    matrix = pd.read_csv(out / "second_variation.csv")
    assert matrix.shape == (49, 49)


def test_integrate_writes_trajectory(tmp_path):
    out = tmp_path / "integrate"
    assert run_cli("integrate", CONFIG_DIR / "so3_integrate.yaml", out) == EXIT_OK

    trajectory = pd.read_csv(out / "trajectory.csv")
    assert trajectory.columns.tolist() == ["t", "y1", "y2", "y3", "energy"]
    metadata = read_json(out / "trajectory_meta.json")
    assert metadata["max_el_residual"] <= 1e-6


def test_lifted_catalog_entry(tmp_path):
    out = tmp_path / "lift"
    assert run_cli("integrate", CONFIG_DIR / "lift_so3_integrate.json", out) == EXIT_OK
    trajectory = pd.read_csv(out / "trajectory.csv")
    assert [c for c in trajectory.columns if c.startswith("y")] == [f"y{i}" for i in range(1, 7)]


def test_manifest_is_deterministic(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert run_cli("secondvar", CONFIG_DIR / "flat_secondvar.json", first) == EXIT_OK
    assert run_cli("secondvar", CONFIG_DIR / "flat_secondvar.json", second) == EXIT_OK

    manifest = read_json(first / "manifest.json")
    for key in ("tool", "version", "subcommand", "config_sha256", "artifacts", "residual_summary", "status"):
        assert key in manifest
    assert manifest["subcommand"] == "secondvar"
    assert manifest["status"] == "ok"
    assert manifest["artifacts"] == ["second_variation.csv", "second_variation_meta.json"]

    for name in ("manifest.json", "second_variation.csv", "second_variation_meta.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_bad_anchor_shape_is_a_config_error(tmp_path, capsys):
    document = {
        "algebroid": {"n": 2, "k": 2, "rho": [["1", "0"], ["0"]], "c": ZERO_C2},
        "lagrangian": "(y1^2 + y2^2)/2",
        "run": {"t0": 0.0, "t1": 1.0, "steps": 10, "x0": [0.0, 0.0], "y0": [1.0, 0.0]},
    }
    path = write_config(tmp_path, document)

    # Test case 1: exit code and message
    assert run_cli("integrate", path, tmp_path / "out") == EXIT_CONFIG
    assert "algebroid.rho[1]" in capsys.readouterr().out

    # Test case 2: the loader reports the field path
    with pytest.raises(DimensionError) as info:
        load_config(path)
    assert info.value.field == "algebroid.rho[1]"


def test_config_validation():
    base = {"algebroid": "so3", "lagrangian": "default"}

    # Test case 1: unknown top-level key
    with pytest.raises(ConfigError) as info:
        build_config(dict(base, solver="rk4"))
    assert "solver" in str(info.value)

    # Test case 2: unknown catalog entry
    with pytest.raises(ConfigError) as info:
        build_config({"algebroid": "so4", "lagrangian": "default"})
    assert info.value.field == "algebroid"

    # Test case 3: y0 of the wrong length
    with pytest.raises(DimensionError):
        build_config(dict(base, run={"y0": [1.0, 0.0]}))

    # Test case 4: catalog defaults fill the run section
    config = build_config(base)
    assert config.run.y0.tolist() == [1.0, 0.1, 0.1]
    assert config.catalog_name == "so3"


def test_numerical_failure_still_writes_manifest(tmp_path):
    document = {
        "algebroid": "tangent(1)",
        "lagrangian": "y1",
        "run": {"t0": 0.0, "t1": 1.0, "steps": 10, "x0": [0.0], "y0": [1.0]},
    }
    path = write_config(tmp_path, document, "degenerate.yaml")
    out = tmp_path / "out"
    assert run_cli("integrate", path, out) == EXIT_NUMERICAL

    manifest = read_json(out / "manifest.json")
    assert manifest["status"] == "failed: SingularHessianError"
    assert manifest["artifacts"] == []


@pytest.mark.parametrize("metric", [5, [[1, {"a": 1}], [0, 1]], [[1, None], [None, 1]], [[1, 0], "0, 1"]])
def test_malformed_metric_is_a_config_error(tmp_path, metric):
    document = {"algebroid": "tangent(2)", "lagrangian": {"kind": "kinetic", "metric": metric}}

    # Test case 1: the loader names the metric
    with pytest.raises(ConfigError) as info:
        build_config(document)
    assert "metric" in info.value.field

    # Test case 2: exit code
    path = write_config(tmp_path, document)
    assert run_cli("integrate", path, tmp_path / "out") == EXIT_CONFIG
