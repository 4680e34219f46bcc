"""
Quadratic cost sets described by inline coefficient tables.

Every scalar entry of ``H``, ``R`` and ``d`` is either a number or a list of
terms that are summed::

    {"poly": [c0, c1, c2]}        c0 + c1 t + c2 t^2
    {"sin": [a, w, phase]}        a sin(w t + phase)
    {"cos": [a, w, phase]}        a cos(w t + phase)
    {"exp": [a, rate]}            a exp(rate t)

A cost-set mapping looks like::

    name: quadratic_custom
    assumptions: {h1: 2.0, h2: 0.5}
    agents:
      - H: [[2, 0], [0, 2]]
        R: [[{sin: [1, 1, 0]}], 0]
      - ...

``assumptions`` is required: ``h1`` feeds the dead-zone floor and ``h2``
validates the fixed estimator gain, and neither is estimated behind the
user's back.
"""

import math
from numbers import Real

import numpy as np

from .costs import CostAssumptions, CostSet, QuadraticCost
from .exceptions import ConfigurationError


def _term(entry):
    """Return ``(f, f')`` for one term mapping."""
    if not isinstance(entry, dict) or len(entry) != 1:
        raise ConfigurationError(f"a term must be a one-key mapping, got {entry!r}")
    (kind, args), = entry.items()
    try:
        args = [float(a) for a in args]
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad arguments for {kind!r}: {args!r}") from exc
    if kind == "poly":
        c = args
        dc = [k * ck for k, ck in enumerate(c)][1:]

        def f(t):
            return sum(ck * t**k for k, ck in enumerate(c))

        def fd(t):
            return sum(ck * t**k for k, ck in enumerate(dc))

        return f, fd
    if kind in ("sin", "cos"):
        if len(args) != 3:
            raise ConfigurationError(f"{kind!r} takes [amplitude, frequency, phase], got {args}")
        a, w, ph = args
        if kind == "sin":
            return (lambda t: a * math.sin(w * t + ph)), (lambda t: a * w * math.cos(w * t + ph))
        return (lambda t: a * math.cos(w * t + ph)), (lambda t: -a * w * math.sin(w * t + ph))
    if kind == "exp":
        if len(args) != 2:
            raise ConfigurationError(f"'exp' takes [amplitude, rate], got {args}")
        a, rate = args
        return (lambda t: a * math.exp(rate * t)), (lambda t: a * rate * math.exp(rate * t))
    raise ConfigurationError(f"unknown term kind {kind!r}")


def scalar_function(entry):
    """Compile a table entry into ``(f, f')`` callables of ``t``."""
    if isinstance(entry, bool):
        raise ConfigurationError(f"table entry must be numeric, got {entry!r}")
    if isinstance(entry, Real):
        v = float(entry)
        return (lambda t: v), (lambda t: 0.0)
    if isinstance(entry, dict):
        entry = [entry]
    if not isinstance(entry, (list, tuple)) or not entry:
        raise ConfigurationError(f"table entry must be a number or a list of terms, got {entry!r}")
    parts = [_term(s) for s in entry]
    return (lambda t: sum(f(t) for f, _ in parts)), (lambda t: sum(d(t) for _, d in parts))


def _vector(entries, m, what):
    if len(entries) != m:
        raise ConfigurationError(f"{what} needs {m} entries, got {len(entries)}")
    fs = [scalar_function(e) for e in entries]

    def v(t):
        return np.array([f(t) for f, _ in fs])

    def vd(t):
        return np.array([d(t) for _, d in fs])

    return v, vd


def _matrix(rows, what):
    m = len(rows)
    if m == 0 or any(not isinstance(r, (list, tuple)) or len(r) != m for r in rows):
        raise ConfigurationError(f"{what} must be a square table")
    # symmetric as data, so H(t) is symmetric at every t and not only at 0
    if any(rows[i][j] != rows[j][i] for i in range(m) for j in range(i)):
        raise ConfigurationError(f"{what} table is not symmetric")
    fs =[[scalar_function(e) for e in r] for r in rows]

    def h(t):
        return np.array([[f(t) for f, _ in r] for r in fs])

    def hd(t):
        return np.array([[d(t) for _, d in r] for r in fs])

    return h, hd, m


def table_cost(agent):
    """One :class:`QuadraticCost` from ``{"H": ..., "R": ..., "d": ...}``."""
    try:
        h_rows = agent["H"]
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"agent entry needs an 'H' table: {agent!r}") from exc
    H, H_dot, m = _matrix(h_rows, "H")
    R, R_dot = _vector(agent.get("R", [0.0] * m), m, "R")
    d, _ = scalar_function(agent.get("d", 0.0))
    return QuadraticCost(H, H_dot, R, R_dot, d)


def quadratic_cost_set(entry):
    """Build a :class:`CostSet` from a ``quadratic_custom`` mapping."""
    agents = entry.get("agents")
    if not agents:
        raise ConfigurationError("quadratic_custom needs a non-empty 'agents' list")
    costs = [table_cost(a) for a in agents]
    dims = {c.dim for c in costs}
    if len(dims) != 1:
        raise ConfigurationError(f"all agents must share one dimension, got {sorted(dims)}")
    a = entry.get("assumptions")
    if not isinstance(a, dict) or "h1" not in a or "h2" not in a:
        raise ConfigurationError("quadratic_custom needs assumptions with 'h1' and 'h2'")
    assumptions = CostAssumptions(h1=float(a["h1"]), h2=float(a["h2"]))
    x0 = entry.get("x0")
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (len(costs), costs[0].dim):
            raise ConfigurationError(f"x0 must have shape {(len(costs), costs[0].dim)}")
    return CostSet(entry.get("label", "quadratic_custom"), costs, assumptions, x0=x0)
