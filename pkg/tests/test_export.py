import csv
import json

import numpy as np
import pytest

from datvo.experiments import preset
from datvo.export import csv_header, export_run, metrics_document, write_plane_paths
from datvo.sim import metrics, run


@pytest.fixture(scope="module")
def short_run():
    cfg = preset("example2")
    cfg.t_final = 0.2
    traj = run(cfg)
    return traj, metrics(traj)


def test_header_order():
    assert csv_header(2, 2) == [
        "t", "x_1_1", "x_1_2", "x_2_1", "x_2_2", "err_1", "err_2",
        "consensus", "average", "estimator", "rstar_1", "rstar_2",
    ]


def test_export_files(short_run, tmp_path):
    traj, m = short_run
    paths = export_run(traj, m, tmp_path)
    assert set(paths) == {"traj", "metrics", "tracking_error", "plane_paths"}
    with open(paths["traj"]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == csv_header(6, 2)
    assert len(rows) == traj.times.size + 1
    np.testing.assert_allclose([float(v) for v in rows[1][1:3]], traj.x[0, 0])
    doc = json.loads(paths["metrics"].read_text())
    assert doc["metrics"]["h0"] == 0.1
    assert doc["params"]["k"] == 20.0
    assert doc["events"]["agent5_fade"] == 67.0
    dat = paths["tracking_error"].read_text().splitlines()
    assert dat[0].startswith("# t err_1")
    assert len(dat) == traj.times.size + 1


def test_byte_identical(short_run, tmp_path):
    traj, m = short_run
    a = export_run(traj, m, tmp_path / "a")
    b = export_run(traj, m, tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()


def test_infinite_metric_becomes_null():
    doc = metrics_document({"estimator_settling_time": float("inf"), "n": np.int64(3)})
    assert doc["metrics"]["estimator_settling_time"] is None
    assert json.dumps(doc)


def test_plane_paths_need_two_dims(short_run, tmp_path):
    traj, _ = short_run
    traj3 = type(traj)(**{**traj.__dict__, "x": np.zeros((traj.times.size, 6, 3))})
    with pytest.raises(ValueError):
        write_plane_paths(traj3, tmp_path / "p.dat")
