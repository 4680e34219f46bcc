import csv

import pytest
import yaml

from datvo.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_IO, EXIT_OK, apply_overrides, main, parse_set
from datvo.exceptions import ConfigurationError
from datvo.experiments import preset


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", "example2", "--set", "t_final=0.2", "--out", str(out)]) == EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert names == {"traj.csv", "metrics.json", "tracking_error.dat", "plane_paths.dat"}
    assert "terminal tracking error" in capsys.readouterr().out


def test_run_is_reproducible(tmp_path):
    for d in ("a", "b"):
        main(["run", "example2", "--set", "t_final=0.2", "--out", str(tmp_path / d)])
    for name in ("traj.csv", "metrics.json"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b


def test_run_example1_with_finer_step(tmp_path):
    out = tmp_path / "e1"
    args = ["run", "example1", "--set", "dt=5e-4", "--set", "t_final=0.01", "--out", str(out)]
    assert main(args) == EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert names == {"traj.csv", "metrics.json", "tracking_error.dat"}


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "example3"],
        ["run", "example2", "--set", "nonsense=1"],
        ["run", "example2", "--set", "dt=fast"],
        ["run", "example2", "--set", "omega=0.01"],
        ["run", "example2", "--set", "dt"],
        ["run", "custom"],
    ],
)
def test_config_errors(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_CONFIG


def test_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    argv = ["run", "example2", "--set", "t_final=0.01", "--out", str(blocker / "sub")]
    assert main(argv) == EXIT_IO


def test_custom_config(tmp_path):
    cfg = {
        "cost_set": {
            "name": "quadratic_custom",
            "assumptions": {"h1": 3.0, "h2": 0.0},
            "agents": [
                {"H": [[1]], "R": [[{"sin": [1, 1, 0]}]]},
                {"H": [[1]], "R": [0]},
                {"H": [[1]], "R": [-1]},
            ],
            "x0": [[1.0], [0.0], [-1.0]],
        },
        "omega": 2.0,
        "h0": 0.1,
        "k": 3.0,
        "eps1": 0.01,
        "eps2": 0.001,
        "t_final": 0.5,
    }
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump(cfg))
    out = tmp_path / "o"
    assert main(["run", "custom", "--config", str(path), "--out", str(out)]) == EXIT_OK
    with open(out / "traj.csv") as fh:
        header = next(csv.reader(fh))
    assert header[:4] == ["t", "x_1_1", "x_2_1", "x_3_1"]


def test_bad_yaml(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("[unclosed")
    assert main(["run", "custom", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG
    path.write_text("- a list")
    assert main(["run", "example2", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_sweep(tmp_path):
    argv = ["sweep", "example2", "--param", "k", "--values", "10,20", "--set", "t_final=0.1",
            "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    rows = list(csv.reader(open(tmp_path / "sweep.csv")))
    assert rows[0][0] == "k" and [r[0] for r in rows[1:]] == ["10", "20"]


def test_validate_and_injection(capsys):
    assert main(["validate"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "6/6 properties passed" in out
    assert main(["validate", "--inject-asymmetric-xi0"]) == EXIT_FAILED
    out = capsys.readouterr().out
    assert "FAIL  estimator" in out


def test_overrides():
    cfg = apply_overrides(preset("example2"), {"k": 5, "cost_set.fade_time_constant": 0.5})
    assert cfg.k == 5.0 and isinstance(cfg.k, float)
    assert cfg.cost_set == {"name": "example2", "fade_time_constant": 0.5}
    for bad in ({"seed": 1.5}, {"check_invariants": "yes"}, {"method": 3}, {"graph": 3},
                {"k.x": 1}):
        with pytest.raises(ConfigurationError):
            apply_overrides(preset("example2"), bad)
    assert parse_set(["a=1e-3", "b=true", "c=[1, 2]"]) == {"a": 1e-3, "b": True, "c": [1, 2]}
