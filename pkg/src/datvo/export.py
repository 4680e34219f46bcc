"""
Trajectory and metrics writers.

``traj.csv`` columns, in this order (agents and axes are 1-based)::

    t,
    x_1_1, x_1_2, ..., x_N_m        physical positions
    err_1, ..., err_N               tracking error |x_i - offset_i - r*|
    consensus, average, estimator   |e|, |mean(x) - r*|, max_i |z_i - H_bar|_F
    rstar_1, ..., rstar_m           optimal trajectory

``tracking_error.dat`` holds ``t`` and ``err_i`` as whitespace-separated
columns under a ``#`` header. ``plane_paths.dat`` (planar problems only)
holds ``t``, every agent's ``x, y`` and the formation centre ``r*``.
Floats are written with 12 significant digits so that identical runs give
byte-identical files.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

FLOAT_FORMAT = "{:.12g}"


def _fmt(v):
    return FLOAT_FORMAT.format(float(v))


def csv_header(n_agents, dim):
    cols = ["t"]
    cols += [f"x_{i + 1}_{p + 1}" for i in range(n_agents) for p in range(dim)]
    cols += [f"err_{i + 1}" for i in range(n_agents)]
    cols += ["consensus", "average", "estimator"]
    cols += [f"rstar_{p + 1}" for p in range(dim)]
    return cols


def trajectory_rows(traj):
    """``traj.csv`` body as a 2-D float array, columns in header order."""
    s = traj.times.size
    block = np.column_stack(
        [
            traj.times,
            traj.x.reshape(s, -1),
            traj.tracking_error,
            traj.consensus_error,
            traj.average_error,
            traj.estimator_error,
            traj.r_star,
        ]
    )
    return block


def write_trajectory_csv(traj, path):
    block = trajectory_rows(traj)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(traj.n_agents, traj.dim))
        for row in block:
            w.writerow([_fmt(v) for v in row])


def _write_dat(path, header, block):
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in block:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def write_tracking_error(traj, path):
    header = ["t"] + [f"err_{i + 1}" for i in range(traj.n_agents)]
    _write_dat(path, header, np.column_stack([traj.times, traj.tracking_error]))


def write_plane_paths(traj, path):
    """Planar paths of every agent plus the optimal trajectory."""
    if traj.dim != 2:
        raise ValueError(f"plane paths need a planar problem, got dimension {traj.dim}")
    header = ["t"]
    for i in range(traj.n_agents):
        header += [f"x_{i + 1}", f"y_{i + 1}"]
    header += ["rstar_x", "rstar_y"]
    s = traj.times.size
    block = np.column_stack([traj.times, traj.x.reshape(s, -1), traj.r_star])
    _write_dat(path, header, block)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)) or v is None or isinstance(v, str):
        return bool(v) if isinstance(v, np.bool_) else v
    if isinstance(v, (int, np.integer)):
        return int(v)
    f = float(v)
    # JSON has no infinities; an unsettled estimator is written as null
    return f if math.isfinite(f) else None


def metrics_document(metrics, params=None, events=None):
    doc = {"metrics": _jsonable(metrics)}
    if params is not None:
        doc["params"] = _jsonable(params)
    if events:
        doc["events"] = _jsonable(events)
    return doc


def write_metrics_json(metrics, path, params=None, events=None):
    with open(path, "w") as fh:
        json.dump(metrics_document(metrics, params, events), fh, indent=2, sort_keys=True)
        fh.write("\n")


def export_run(traj, metrics, out_dir):
    """Write every output file for one run; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "traj": out / "traj.csv",
        "metrics": out / "metrics.json",
        "tracking_error": out / "tracking_error.dat",
    }
    write_trajectory_csv(traj, paths["traj"])
    write_metrics_json(metrics, paths["metrics"], traj.params, traj.info.get("events"))
    write_tracking_error(traj, paths["tracking_error"])
    if traj.dim == 2:
        paths["plane_paths"] = out / "plane_paths.dat"
        write_plane_paths(traj, paths["plane_paths"])
    return paths
