"""
Closed-loop simulation: estimator -> dead zone -> optimizer.

The stacked state ``(xi, x, alpha, beta)`` is advanced with a fixed step.
The dead-zone filter runs once per step, at the start of the step, so its
hold registers advance in time order. Three schemes are available:

``"imex"`` (default)
    Euler step in which the consensus coupling is taken implicitly: the
    ``alpha`` term exactly, the ``beta S(.)`` term through lagged weights
    ``beta / (|x_i - x_j| + eps1 eta)``. The adaptive law can drive ``alpha``
    far beyond the explicit stability limit ``2 / (dt lambda_max(L))``, and
    once ``eta`` has decayed the switching term chatters at amplitude
    ``beta dt`` under an explicit step; the implicit treatment avoids both.
    The estimator's signum coupling gets the same lagged-weight treatment,
    solved against the Hessians at the end of the step, because the
    state-based gains grow with ``|x'|`` and would otherwise chatter at
    amplitude ``omega dt``.
``"euler"``
    Fully explicit Euler.
``"rk4"``
    Classical Runge-Kutta with the dead-zone output frozen over the step.

Everything that needs global knowledge (the optimal trajectory, the true
mean Hessian) is confined to recording and metrics.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import costs as costs_mod
from .costs import CostSet
from .estimator import (
    FIXED,
    STATE,
    DeadZone,
    asymmetry,
    check_fixed_gain,
    fixed_gain_rhs,
    hess_dot_bound,
    select_h0,
    state_gain_rhs,
    state_gains,
)
from .exceptions import (
    ConfigurationError,
    InvariantViolation,
    OracleFailure,
    SimulationDivergedError,
)
from .graph import graph_from_config, ring_graph
from .optimizer import (
    coupling,
    edge_differences,
    eta,
    feedback,
    init_adaptive_gains,
    select_k,
    warn_if_k_below_bound,
)

METHODS = ("imex", "euler", "rk4")
ESCAPE_BOUND = 1e6
ALPHA_ROUNDOFF = 1e-12
ESTIMATOR_TOL = 1e-2
MAX_STIFFNESS = 1e6


# ---------------------------------------------------------------------------
# optimal trajectory oracle


def _global_terms(costs, r, t):
    g = np.zeros_like(r)
    h = np.zeros((r.size, r.size))
    for c in costs:
        gi, _, hi = c.local_terms(r, t)
        g += gi
        h += hi
    return g, h


def direct_optimum(costs, t):
    """Minimizer of a sum of quadratics by one linear solve."""
    m = costs[0].dim
    g0, h = _global_terms(costs, np.zeros(m), t)
    return np.linalg.solve(h, -g0)


def newton_optimum(costs, t, r0, tol=1e-10, max_iter=100):
    """Damped Newton iteration on ``sum_i grad f_i(r, t) = 0``.

    The step is halved until the gradient norm decreases.

    Raises
    ------
    OracleFailure
        If ``|grad| >= tol`` after ``max_iter`` iterations.
    """
    r = np.array(r0, dtype=float)
    g, h = _global_terms(costs, r, t)
    gn = np.linalg.norm(g)
    for _ in range(max_iter):
        if gn < tol:
            return r
        p = np.linalg.solve(h, -g)
        s = 1.0
        while True:
            r_try = r + s * p
            g_try, h_try = _global_terms(costs, r_try, t)
            gn_try = np.linalg.norm(g_try)
            if gn_try < (1.0 - 1e-4 * s) * gn or s < 1e-8:
                break
            s *= 0.5
        r, g, h, gn = r_try, g_try, h_try, gn_try
    if gn < tol:
        return r
    raise OracleFailure(t, gn)


def optimal_trajectory(costs, t_grid, method="auto", tol=1e-10):
    """``r*(t) = argmin_r sum_i f_i(r, t)`` sampled on ``t_grid``.

    Parameters
    ----------
    costs : list of CostModel
    t_grid : array_like
    method : {"auto", "direct", "newton"}
        ``"auto"`` uses the linear solve when every cost is quadratic.

    Returns
    -------
    r_star : (len(t_grid), m) array
    """
    t_grid = np.asarray(t_grid, dtype=float)
    m = costs[0].dim
    if method == "auto":
        method = "direct" if all(c.quadratic for c in costs) else "newton"
    out = np.empty((t_grid.size, m))
    r = np.zeros(m)
    for n, t in enumerate(t_grid):
        if method == "direct":
            r = direct_optimum(costs, t)
        elif method == "newton":
            r = newton_optimum(costs, t, r, tol=tol)
        else:
            raise ConfigurationError(f"unknown oracle method {method!r}")
        out[n] = r
    return out


def optimality_residuals(costs, t_grid, r_star):
    """``|sum_i grad f_i(r*(t), t)|`` per sample."""
    return np.array(
        [np.linalg.norm(sum(c.grad(r, t) for c in costs)) for t, r in zip(t_grid, r_star)]
    )


# ---------------------------------------------------------------------------
# trajectory


@dataclass
class Trajectory:
    """Recorded closed-loop run.

    Arrays are indexed by sample first. ``x`` holds physical positions
    (working state plus ``offsets``); ``tracking_error[s, i]`` is
    ``|x_i - offsets_i - r*|``.
    """

    times: np.ndarray
    x: np.ndarray
    z: np.ndarray
    zhat: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    r_star: np.ndarray
    offsets: np.ndarray
    tracking_error: np.ndarray
    consensus_error: np.ndarray
    average_error: np.ndarray
    estimator_error: np.ndarray
    h_bar: np.ndarray
    oracle_residual: np.ndarray
    edges: tuple
    monitors: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def n_agents(self):
        return self.x.shape[1]

    @property
    def dim(self):
        return self.x.shape[2]


class _Monitor:
    """Running extremes of the structural invariants over every step."""

    def __init__(self, strict, h0):
        self.strict = strict
        self.h0 = h0
        self.min_zhat_margin = math.inf
        self.max_xi_sum = 0.0
        self.max_z_asymmetry = 0.0
        self.min_beta = math.inf
        self.max_alpha_decrease = 0.0
        self.max_abs_x = 0.0

    def _fail(self, msg):
        if self.strict:
            raise InvariantViolation(msg)

    def observe(self, t, xi, z_asymmetry, margins, x, beta):
        mm = float(margins.min())
        self.min_zhat_margin = min(self.min_zhat_margin, mm)
        if mm < self.h0:
            self._fail(f"dead-zone floor broken at t={t:.6g}: {mm} < {self.h0}")
        s = float(np.max(np.abs(xi.sum(axis=0))))
        self.max_xi_sum = max(self.max_xi_sum, s)
        self.max_z_asymmetry = max(self.max_z_asymmetry, z_asymmetry)
        b = float(beta.min()) if beta.size else math.inf
        self.min_beta = min(self.min_beta, b)
        if b < 0:
            self._fail(f"beta went negative at t={t:.6g}: {b}")
        self.max_abs_x = max(self.max_abs_x, float(np.max(np.abs(x))))

    def observe_alpha(self, t, old, new):
        if old.size:
            dec = float(np.max(old - new))
            self.max_alpha_decrease = max(self.max_alpha_decrease, dec)
            if dec > ALPHA_ROUNDOFF:
                self._fail(f"alpha decreased by {dec} at t={t:.6g}")

    def as_dict(self):
        return {
            "min_zhat_margin": self.min_zhat_margin,
            "max_xi_sum": self.max_xi_sum,
            "max_z_asymmetry": self.max_z_asymmetry,
            "min_beta": self.min_beta,
            "max_alpha_decrease": self.max_alpha_decrease,
            "max_abs_x": self.max_abs_x,
        }


def _check_finite(t, **arrays):
    for name, a in arrays.items():
        if not np.all(np.isfinite(a)):
            bad = np.argwhere(~np.isfinite(a))[0]
            raise SimulationDivergedError(t, int(bad[0]), name)


def _local_terms(costs, x, t):
    terms = [c.local_terms(xi, t) for c, xi in zip(costs, x)]
    g = np.array([a for a, _, _ in terms])
    gt = np.array([b for _, b, _ in terms])
    h = np.array([c for _, _, c in terms])
    return g, gt, h


def _hess_dots(costs, x, xdot, t):
    return np.array(
        [c.hessian_time_derivative(xi, vi, t) for c, xi, vi in zip(costs, x, xdot)]
    )


def _lagged_sign_weights(diff, beta, layer, dt):
    """Linear weights ``beta / (|d_n| + layer)`` standing in for ``beta S(d)``.

    Applied to the end-of-step difference, ``w d_{n+1}`` equals
    ``beta S(d_n)`` to first order and cannot overshoot zero, which is what
    removes the step-size chatter of the switching term. Weights are capped
    at ``MAX_STIFFNESS / dt`` to keep the linear solve well conditioned.
    """
    den = np.abs(diff) + layer
    b = beta[:, None]
    return b / np.maximum(den, b * dt / MAX_STIFFNESS + 1e-300)


def _shifted_laplacians(inc, weights, dt):
    """Stack of ``I + dt D diag(w_p) D^T``, one per column ``p`` of ``weights``."""
    lap = (inc * weights.T[:, None, :]) @ inc.T
    lap *= dt
    lap += np.eye(inc.shape[0])
    return lap


def _implicit_sign_consensus(z_prev, target, omega_e, graph, dt):
    """One implicit step of ``z' = -sum_j omega_ij sgn(z_i - z_j)`` per matrix entry.

    ``target`` is where ``z`` would land without coupling. The signum of
    every edge difference is replaced by ``d_{n+1} / |d_n|``, which turns
    each independent entry into a graph Laplacian solve. Column sums of
    ``I + dt L`` are one, so the network sum of ``z`` is kept exactly, and
    only the upper triangle is solved so the result is exactly symmetric.
    """
    n, m, _ = target.shape
    iu = np.triu_indices(m)
    diff = (z_prev[graph.sources] - z_prev[graph.targets])[:, iu[0], iu[1]]
    w = omega_e[:, None]
    weights = w / np.maximum(np.abs(diff), w * dt / MAX_STIFFNESS + 1e-300)
    lhs = _shifted_laplacians(graph.incidence_matrix, weights, dt)
    rhs = target[:, iu[0], iu[1]]
    upper = np.linalg.solve(lhs, rhs.T[..., None])[..., 0].T
    # the exact solve keeps the sum; strip the round-off of a stiff system
    upper += (rhs.sum(axis=0) - upper.sum(axis=0)) / n
    out = np.empty_like(target)
    out[:, iu[0], iu[1]] = upper
    out[:, iu[1], iu[0]] = upper
    return out


def simulate(
    costs,
    graph,
    x0,
    *,
    h0,
    k,
    estimator_mode=FIXED,
    omega=None,
    state_margin=0.1,
    eps1=1.0,
    eps2=1.0,
    alpha0=0.0,
    dt=1e-3,
    t_final=10.0,
    record_stride=10,
    method="imex",
    offsets=None,
    xi0=None,
    check_invariants=False,
    oracle=True,
):
    """Integrate the closed loop and return a :class:`Trajectory`.

    ``costs`` are the working-coordinate costs and ``x0`` the working
    initial state, shape ``(N, m)``. ``offsets`` only affects the recorded
    physical positions.
    """
    costs = list(costs)
    n = len(costs)
    m = costs[0].dim
    x = np.array(x0, dtype=float).reshape(n, m)
    if graph.n_nodes != n:
        raise ConfigurationError(f"graph has {graph.n_nodes} nodes but there are {n} costs")
    if method not in METHODS:
        raise ConfigurationError(f"unknown integration method {method!r}")
    if estimator_mode not in (FIXED, STATE):
        raise ConfigurationError(f"unknown estimator mode {estimator_mode!r}")
    if estimator_mode == FIXED and not (omega is not None and omega > 0):
        raise ConfigurationError("fixed-gain estimator needs a positive omega")
    if estimator_mode == STATE and not state_margin >= 0:
        raise ConfigurationError(f"state-gain margin must be nonnegative, got {state_margin}")
    if not dt > 0 or not t_final > dt:
        raise ConfigurationError(f"need dt > 0 and t_final > dt, got dt={dt}, t_final={t_final}")
    if int(record_stride) < 1:
        raise ConfigurationError("record_stride must be a positive integer")
    record_stride = int(record_stride)
    offsets = np.zeros((n, m)) if offsets is None else np.asarray(offsets, dtype=float)

    alpha, beta = init_adaptive_gains(graph, m, eps1, eps2, alpha0)
    beta0 = float(beta[0]) if beta.size else m * eps1 / eps2
    xi = np.zeros((n, m, m)) if xi0 is None else np.array(xi0, dtype=float).reshape(n, m, m)
    dead_zone = DeadZone(n, m, h0)
    monitor = _Monitor(check_invariants, h0)
    inc = graph.incidence_matrix

    def xi_rate(xi_s, h_s, x_s, xdot_s, t_s):
        if estimator_mode == FIXED:
            return fixed_gain_rhs(xi_s, h_s, graph, omega)
        bounds = hess_dot_bound(_hess_dots(costs, x_s, xdot_s, t_s))
        return state_gain_rhs(xi_s, h_s, bounds, graph, state_margin)[0]

    def edge_gains(x_s, xdot_s, t_s):
        if estimator_mode == FIXED:
            return np.full(graph.n_edges, float(omega))
        bounds = hess_dot_bound(_hess_dots(costs, x_s, xdot_s, t_s))
        return state_gains(bounds, graph, state_margin)

    def full_rhs(t_s, x_s, xi_s, a_s, b_s, zhat):
        g, gt, h = _local_terms(costs, x_s, t_s)
        cx, adot, bdot = coupling(x_s, a_s, b_s, graph, eps1, eta(t_s, eps2))
        xdot = cx + feedback(g, gt, zhat, k)
        return xdot, xi_rate(xi_s, h, x_s, xdot, t_s), adot, bdot

    n_steps = int(round(t_final / dt))
    rec_idx = list(range(0, n_steps + 1, record_stride))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    n_rec = len(rec_idx)
    e = graph.n_edges
    rec_t = np.empty(n_rec)
    rec_x = np.empty((n_rec, n, m))
    rec_z = np.empty((n_rec, n, m, m))
    rec_zhat = np.empty((n_rec, n, m, m))
    rec_hbar = np.empty((n_rec, m, m))
    rec_a = np.empty((n_rec, e))
    rec_b = np.empty((n_rec, e))

    wall = time.perf_counter()
    r = 0
    terms = _local_terms(costs, x, 0.0)
    for step in range(n_steps + 1):
        t = step * dt
        g, gt, h = terms
        terms = None
        z = xi + h
        zhat, margins = dead_zone(z, is_initial=(step == 0))
        monitor.observe(t, xi, dead_zone.last_asymmetry, margins, x, beta)

        if step == rec_idx[r]:
            rec_t[r] = t
            rec_x[r] = x + offsets
            rec_z[r] = z
            rec_zhat[r] = zhat
            rec_hbar[r] = h.mean(axis=0)
            rec_a[r] = alpha
            rec_b[r] = beta
            r += 1
        if step == n_steps:
            break

        eta_t = eta(t, eps2)
        if method == "rk4":
            k1 = full_rhs(t, x, xi, alpha, beta, zhat)
            s2 = [v + 0.5 * dt * dv for v, dv in zip((x, xi, alpha, beta), k1)]
            k2 = full_rhs(t + 0.5 * dt, *s2, zhat)
            s3 = [v + 0.5 * dt * dv for v, dv in zip((x, xi, alpha, beta), k2)]
            k3 = full_rhs(t + 0.5 * dt, *s3, zhat)
            s4 = [v + dt * dv for v, dv in zip((x, xi, alpha, beta), k3)]
            k4 = full_rhs(t + dt, *s4, zhat)
            avg = [
                (a1 + 2 * a2 + 2 * a3 + a4) / 6.0 for a1, a2, a3, a4 in zip(k1, k2, k3, k4)
            ]
            x_new = x + dt * avg[0]
            xi_new = xi + dt * avg[1]
            alpha_new = alpha + dt * avg[2]
            beta_new = beta + dt * avg[3]
        else:
            ph = feedback(g, gt, zhat, k)
            # before the coupled solve smears it, so the culprit agent is named
            _check_finite(t, phi=ph)
            diff = edge_differences(x, graph)
            adot = np.einsum("ij,ij->i", diff, diff)
            bdot = np.abs(diff).sum(axis=1) - m * eps1 * eta_t
            if method == "euler":
                cx, _, _ = coupling(x, alpha, beta, graph, eps1, eta_t)
                x_new = x + dt * (cx + ph)
            else:
                weights = alpha[:, None] + _lagged_sign_weights(diff, beta, eps1 * eta_t, dt)
                lhs = _shifted_laplacians(inc, weights, dt)
                x_new = np.linalg.solve(lhs, (x + dt * ph).T[..., None])[..., 0].T
            xdot = (x_new - x) / dt
            if method == "euler":
                xi_new = xi + dt * xi_rate(xi, h, x, xdot, t)
            else:
                _check_finite(t + dt, x=x_new)
                terms = _local_terms(costs, x_new, (step + 1) * dt)
                h_new = terms[2]
                z_new = _implicit_sign_consensus(z, xi + h_new, edge_gains(x, xdot, t), graph, dt)
                xi_new = z_new - h_new
            alpha_new = alpha + dt * adot
            beta_new = beta + dt * bdot

        t_next = (step + 1) * dt
        _check_finite(t_next, x=x_new, xi=xi_new)
        if np.abs(x_new).max() >= ESCAPE_BOUND:
            agent = int(np.argmax(np.abs(x_new).max(axis=1)))
            raise SimulationDivergedError(t_next, agent, "x", f"|x| reached {ESCAPE_BOUND:g}")
        _check_finite(t_next, alpha=alpha_new[:, None], beta=beta_new[:, None])
        monitor.observe_alpha(t_next, alpha, alpha_new)
        x, xi, alpha, beta = x_new, xi_new, alpha_new, beta_new
        if terms is None:
            terms = _local_terms(costs, x, t_next)
    wall = time.perf_counter() - wall

    if oracle:
        r_star = optimal_trajectory(costs, rec_t)
        residual = optimality_residuals(costs, rec_t, r_star)
    else:
        r_star = np.full((n_rec, m), np.nan)
        residual = np.full(n_rec, np.nan)

    work = rec_x - offsets
    tracking = np.linalg.norm(work - r_star[:, None, :], axis=2)
    mean = work.mean(axis=1)
    consensus = np.linalg.norm((work - mean[:, None, :]).reshape(n_rec, -1), axis=1)
    average = np.linalg.norm(mean - r_star, axis=1)
    est_err = np.linalg.norm(rec_z - rec_hbar[:, None], axis=(2, 3)).max(axis=1)

    monitors = monitor.as_dict()
    monitors["beta0"] = beta0
    params = {
        "h0": h0,
        "k": k,
        "estimator_mode": estimator_mode,
        "omega": omega,
        "state_margin": state_margin,
        "eps1": eps1,
        "eps2": eps2,
        "alpha0": alpha0,
        "dt": dt,
        "t_final": t_final,
        "record_stride": record_stride,
        "method": method,
    }
    return Trajectory(
        times=rec_t,
        x=rec_x,
        z=rec_z,
        zhat=rec_zhat,
        alpha=rec_a,
        beta=rec_b,
        r_star=r_star,
        offsets=offsets,
        tracking_error=tracking,
        consensus_error=consensus,
        average_error=average,
        estimator_error=est_err,
        h_bar=rec_hbar,
        oracle_residual=residual,
        edges=graph.edges,
        monitors=monitors,
        params=params,
        info={"wall_time": wall, "n_steps": n_steps},
    )


# ---------------------------------------------------------------------------
# metrics


def settling_time(times, err, tol=ESTIMATOR_TOL):
    """Earliest recorded time after which ``err`` stays below ``tol``.

    Returns ``inf`` when the final sample is not below ``tol``.
    """
    err = np.asarray(err)
    above = np.flatnonzero(~(err < tol))
    if above.size == 0:
        return float(times[0])
    last = above[-1]
    if last == err.size - 1:
        return math.inf
    return float(times[last + 1])


def dead_zone_ratio(traj, floor=1e-9):
    """Largest ``|z_hat_i - H_bar| / |z_i - H_bar|`` over samples with ``|z_i - H_bar| > floor``.

    The dead zone only ever swaps ``z_i`` for a nearby held value, so this
    ratio stays finite along a run.
    """
    num = np.linalg.norm(traj.zhat - traj.h_bar[:, None], axis=(2, 3))
    den = np.linalg.norm(traj.z - traj.h_bar[:, None], axis=(2, 3))
    mask = den > floor
    return float((num[mask] / den[mask]).max()) if mask.any() else 1.0


def metrics(traj, estimator_tol=ESTIMATOR_TOL):
    """Scalar summary of a trajectory (JSON-serializable)."""
    half = traj.times >= 0.5 * traj.times[-1]
    final = traj.tracking_error[-1]
    out = {
        "t_final": float(traj.times[-1]),
        "terminal_tracking_error": float(final.max()),
        "terminal_tracking_errors": [float(v) for v in final],
        "terminal_consensus_error": float(traj.consensus_error[-1]),
        "terminal_average_error": float(traj.average_error[-1]),
        "max_consensus_error_after_half": float(traj.consensus_error[half].max()),
        "estimator_settling_time": settling_time(traj.times, traj.estimator_error, estimator_tol),
        "max_estimator_error_after_settling": _after_settling_max(traj, estimator_tol),
        "max_oracle_residual": float(np.nanmax(traj.oracle_residual))
        if np.isfinite(traj.oracle_residual).any()
        else math.nan,
        "max_dead_zone_ratio": dead_zone_ratio(traj),
        "h0": traj.params.get("h0"),
    }
    out.update({k: float(v) for k, v in traj.monitors.items()})
    return out


def _after_settling_max(traj, tol):
    ts = settling_time(traj.times, traj.estimator_error, tol)
    if not math.isfinite(ts):
        return float(traj.estimator_error[-1])
    return float(traj.estimator_error[traj.times >= ts].max())


# ---------------------------------------------------------------------------
# configuration


@dataclass
class SimConfig:
    """Everything needed to reproduce one run.

    ``cost_set`` names a cost set (``{"name": "example1"}``,
    ``{"name": "example2", "fade_time_constant": 2.0}`` or
    ``{"name": "quadratic_custom", "agents": [...]}``). When ``x0`` is
    omitted and the cost set carries no initial state, agents start
    i.i.d. uniform in ``[-x0_range, x0_range]^m`` drawn with ``seed``.
    ``x0`` is given in physical coordinates.
    """

    cost_set: dict = field(default_factory=lambda: {"name": "example2"})
    graph: dict = None
    estimator: str = FIXED
    omega: float = None
    state_margin: float = 0.1
    h0: float = None
    gamma: float = None
    k: float = None
    eps_margin: float = 1.0
    use_gain_formula: bool = False
    eps1: float = 1.0
    eps2: float = 1.0
    alpha0: float = 0.0
    dt: float = 1e-3
    t_final: float = 10.0
    record_stride: int = 10
    method: str = "imex"
    x0: list = None
    x0_range: float = 5.0
    x0_scale: float = None
    seed: int = 0
    check_invariants: bool = False


def build_cost_set(source):
    """Resolve a cost-set mapping to a :class:`CostSet`."""
    if isinstance(source, CostSet):
        return source
    if isinstance(source, str):
        source = {"name": source}
    name = source.get("name")
    if name == "example1":
        return costs_mod.example1_costs()
    if name == "example2":
        tf = source.get("fade_time_constant", costs_mod.DEFAULT_FADE_TIME_CONSTANT)
        return costs_mod.example2_costs(fade_time_constant=tf)
    if name == "quadratic_custom":
        from .tables import quadratic_cost_set

        return quadratic_cost_set(source)
    raise ConfigurationError(f"unknown cost set {name!r}")


def resolve_gains(cost_set, n, m, *, estimator, omega, h0, gamma, k, eps_margin, use_gain_formula):
    """Fill in ``h0``, ``k`` and ``omega`` from the gain rules where requested.

    Returns ``(h0, k, omega)``.
    """
    a = cost_set.assumptions
    general = not cost_set.quadratic
    if h0 is None:
        if gamma is None:
            raise ConfigurationError("give either h0 or gamma")
        h0 = select_h0(a.h1, n, gamma)
    if not h0 > 0:
        raise ConfigurationError(f"h0 must be positive, got {h0}")
    if k is None or use_gain_formula:
        k = select_k(a, n, m, eps_margin, general=general)
    if not k > 0:
        raise ConfigurationError(f"k must be positive, got {k}")
    warn_if_k_below_bound(k, a, n, m, general=general)
    if estimator == FIXED:
        if omega is None:
            raise ConfigurationError(
                "fixed-gain estimator: omega must be given (it is never guessed)"
            )
        check_fixed_gain(omega, a.h2)
    return h0, k, omega


def initial_state(config, cost_set):
    """Physical initial positions ``(N, m)`` for a config."""
    n, m = cost_set.n_agents, cost_set.dim
    if config.x0 is not None:
        x0 = np.asarray(config.x0, dtype=float)
        if x0.shape != (n, m):
            raise ConfigurationError(f"x0 must have shape {(n, m)}, got {x0.shape}")
    elif cost_set.x0 is not None:
        x0 = np.array(cost_set.x0, dtype=float)
    else:
        rng = np.random.default_rng(config.seed)
        x0 = rng.uniform(-config.x0_range, config.x0_range, size=(n, m))
    if config.x0_scale is not None:
        norms = np.linalg.norm(x0, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        x0 = x0 / norms * config.x0_scale
    return x0


def run(config):
    """Run a :class:`SimConfig` and return its :class:`Trajectory`."""
    cost_set = build_cost_set(config.cost_set)
    n, m = cost_set.n_agents, cost_set.dim
    graph = graph_from_config(config.graph) if config.graph is not None else ring_graph(n)
    h0, k, omega = resolve_gains(
        cost_set,
        n,
        m,
        estimator=config.estimator,
        omega=config.omega,
        h0=config.h0,
        gamma=config.gamma,
        k=config.k,
        eps_margin=config.eps_margin,
        use_gain_formula=config.use_gain_formula,
    )
    x0 = initial_state(config, cost_set)
    offsets = cost_set.offsets
    x0_work = x0 - offsets if offsets is not None else x0
    traj = simulate(
        cost_set.costs,
        graph,
        x0_work,
        h0=h0,
        k=k,
        estimator_mode=config.estimator,
        omega=omega,
        state_margin=config.state_margin,
        eps1=config.eps1,
        eps2=config.eps2,
        alpha0=config.alpha0,
        dt=config.dt,
        t_final=config.t_final,
        record_stride=config.record_stride,
        method=config.method,
        offsets=offsets,
        check_invariants=config.check_invariants,
    )
    traj.info["events"] = dict(cost_set.events)
    traj.info["cost_set"] = cost_set.name
    return traj
