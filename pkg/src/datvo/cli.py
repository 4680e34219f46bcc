"""
Command-line driver.

    datvo run <name> [--config FILE] [--set key=value ...] [--out DIR]
    datvo validate [--inject-asymmetric-xi0]
    datvo sweep <name> --param key --values a,b,c [--jobs N] [--out DIR]

``name`` is ``example1``, ``example2`` or ``custom`` (which needs a config
file providing at least ``cost_set``). A config file is YAML whose keys are
:class:`~datvo.sim.SimConfig` fields; ``--set`` overrides are applied after
it. Dotted keys reach into mapping fields, e.g.
``--set cost_set.fade_time_constant=0.5``.

Exit codes: 0 ok, 1 validation or run failure, 2 configuration error,
3 I/O error.
"""

import argparse
import copy
import csv
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from .exceptions import (
    ConfigurationError,
    InvariantViolation,
    OracleFailure,
    SimulationDivergedError,
)
from .experiments import EXPERIMENTS, preset
from .export import export_run
from .sim import SimConfig, metrics, run
from .validation import run_suite

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}
_FLOAT_FIELDS = {
    "omega", "state_margin", "h0", "gamma", "k", "eps_margin", "eps1", "eps2",
    "alpha0", "dt", "t_final", "x0_range", "x0_scale",
}
_INT_FIELDS = {"record_stride", "seed"}
_BOOL_FIELDS = {"use_gain_formula", "check_invariants"}
_STR_FIELDS = {"estimator", "method"}
_MAP_FIELDS = {"cost_set", "graph"}


def _coerce_field(key, value):
    if value is None:
        return None
    if key in _BOOL_FIELDS:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key} must be true or false, got {value!r}")
        return value
    if key in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{key} must be an integer, got {value!r}")
        return value
    if key in _FLOAT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{key} must be a number, got {value!r}")
        return float(value)
    if key in _STR_FIELDS:
        if not isinstance(value, str):
            raise ConfigurationError(f"{key} must be a string, got {value!r}")
        return value
    if key in _MAP_FIELDS:
        if not isinstance(value, dict):
            raise ConfigurationError(f"{key} must be a mapping, got {value!r}")
        return value
    return value  # x0: validated when the run starts


def apply_overrides(config, overrides):
    """Return a copy of ``config`` with ``{key: value}`` overrides applied."""
    config = copy.deepcopy(config)
    for key, value in overrides.items():
        head, _, rest = key.partition(".")
        if head not in _FIELDS:
            raise ConfigurationError(f"unknown config key {head!r}")
        if rest:
            if head not in _MAP_FIELDS:
                raise ConfigurationError(f"{head!r} has no sub-keys")
            target = dict(getattr(config, head) or {})
            node = target
            parts = rest.split(".")
            for p in parts[:-1]:
                node = node.setdefault(p, {})
            node[parts[-1]] = value
            setattr(config, head, target)
        else:
            setattr(config, head, _coerce_field(head, value))
    return config


def parse_set(items):
    """``["k=v", ...]`` to a dict; values are parsed as YAML scalars."""
    out = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"cannot parse value of {key!r}: {raw!r}") from exc
        out[key.strip()] = _numeric_string(value)
    return out


def _numeric_string(value):
    # YAML 1.1 leaves exponent forms without a dot, such as 5e-4, as strings
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    return value


def load_config_file(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: invalid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return {k: _numeric_string(v) if k in _FLOAT_FIELDS else v for k, v in data.items()}


def resolve_config(name, config_path=None, set_items=None):
    """Build the :class:`SimConfig` for ``name`` plus file and ``--set`` overrides."""
    if name == "custom":
        if config_path is None:
            raise ConfigurationError("'custom' needs --config with at least a cost_set")
        base = SimConfig()
    elif name in EXPERIMENTS:
        base = preset(name)
    else:
        raise ConfigurationError(f"unknown experiment {name!r}; choose from "
                                 f"{sorted(EXPERIMENTS) + ['custom']}")
    if config_path is not None:
        base = apply_overrides(base, load_config_file(config_path))
    return apply_overrides(base, parse_set(set_items))


def _run_one(config):
    traj = run(config)
    return traj, metrics(traj)


def cmd_run(args):
    config = resolve_config(args.name, args.config, args.set)
    traj, summary = _run_one(config)
    paths = export_run(traj, summary, args.out)
    print(f"terminal tracking error: {summary['terminal_tracking_error']:.6g}")
    for p in paths.values():
        print(f"wrote {p}")
    return EXIT_OK


def cmd_validate(args):
    results = run_suite(inject_asymmetric_xi0=args.inject_asymmetric_xi0)
    for r in results:
        print(r.line())
    failed = sum(not r.ok for r in results)
    print(f"{len(results) - failed}/{len(results)} properties passed")
    return EXIT_OK if failed == 0 else EXIT_FAILED


def _sweep_point(config):
    return metrics(run(config))


def cmd_sweep(args):
    values = [parse_set([f"v={v}"])["v"] for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigurationError("--values is empty")
    base = resolve_config(args.name, args.config, args.set)
    configs = [apply_overrides(base, {args.param: v}) for v in values]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, configs))
    else:
        results = [_sweep_point(c) for c in configs]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    keys = ["terminal_tracking_error", "terminal_consensus_error", "estimator_settling_time",
            "min_zhat_margin", "max_xi_sum", "max_abs_x"]
    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([args.param] + keys)
        for v, m in zip(values, results):
            w.writerow([v] + ["{:.12g}".format(m[k]) for k in keys])
            print(f"{args.param}={v}: terminal tracking error {m['terminal_tracking_error']:.6g}")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="datvo", description="distributed time-varying optimization harness")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment and export its data files")
    r.add_argument("name")
    r.add_argument("--config", help="YAML file of SimConfig fields")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
    r.add_argument("--out", default="out", help="output directory")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="run the invariant suite")
    v.add_argument("--inject-asymmetric-xi0", action="store_true",
                   help="start the estimator from an asymmetric xi (negative test)")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("sweep", help="rerun an experiment over values of one key")
    s.add_argument("name")
    s.add_argument("--param", required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--config")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SimulationDivergedError, OracleFailure, InvariantViolation, ValueError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
