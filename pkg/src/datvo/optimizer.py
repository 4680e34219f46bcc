"""
Adaptive consensus optimizer.

Agent ``i`` moves along::

    x_i' = -sum_j (alpha_ij (x_i - x_j) + beta_ij S(x_i - x_j)) + phi_i
    phi_i = -k grad f_i - z_hat_i^{-1} d/dt grad f_i
    alpha_ij' = |x_i - x_j|^2
    beta_ij'  = |x_i - x_j|_1 - m eps1 exp(-eps2 t)

with ``S`` the smoothed signum ``v / (|v| + eps1 eta)``. Edge gains are
stored once per undirected edge, so ``alpha_ij == alpha_ji`` holds exactly.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, InvariantViolation


def eta(t, eps2):
    """Boundary-layer schedule ``exp(-eps2 t)``."""
    return math.exp(-eps2 * t)


def smoothed_sign(v, eps1, eta):
    """Componentwise ``v / (|v| + eps1 eta)``; zero where ``v`` is zero."""
    v = np.asarray(v, dtype=float)
    den = np.abs(v) + eps1 * eta
    with np.errstate(invalid="ignore", divide="ignore"):
        out = v / den
    return np.where(v == 0.0, 0.0, out)


def _solve(zhat, rhs):
    try:
        return np.linalg.solve(zhat, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise InvariantViolation("dead-zone output is singular") from exc


def phi(cost, zhat, x, t, k):
    """Gradient feedback plus inverse-Hessian feedforward for one agent."""
    g, gt, _ = cost.local_terms(np.asarray(x, dtype=float), t)
    return -k * g - _solve(np.asarray(zhat, dtype=float), gt)


def feedback(grads, grads_t, zhat, k):
    """Stacked ``phi_i`` from precomputed gradients, shape ``(N, m)``."""
    return -k * grads - _solve(zhat, grads_t)


@dataclass
class OptimizerState:
    """Decision variables and adaptive edge gains.

    ``alpha`` and ``beta`` hold one value per edge of the graph, in the
    graph's edge order.
    """

    x: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    k: float
    eps1: float = 1.0
    eps2: float = 1.0
    t: float = 0.0


def init_adaptive_gains(graph, m, eps1, eps2, alpha0=0.0):
    """Initial edge gains ``alpha = alpha0`` and ``beta = m eps1 / eps2``."""
    if not eps1 > 0:
        raise ConfigurationError(f"eps1 must be positive, got {eps1}")
    if not eps2 > 0:
        raise ConfigurationError(f"eps2 must be positive, got {eps2}")
    if not alpha0 >= 0:
        raise ConfigurationError(f"alpha0 must be nonnegative, got {alpha0}")
    e = graph.n_edges
    return np.full(e, float(alpha0)), np.full(e, m * eps1 / eps2)


def edge_differences(x, graph):
    """``x_i - x_j`` for every edge ``(i, j)``, shape ``(E, m)``."""
    return x[graph.sources] - x[graph.targets]


def coupling(x, alpha, beta, graph, eps1, eta_t):
    """Consensus part of ``x'`` and the edge-gain derivatives.

    Returns
    -------
    xdot : (N, m) array
        ``-sum_j (alpha_ij (x_i - x_j) + beta_ij S(x_i - x_j))``.
    alpha_dot, beta_dot : (E,) arrays
    """
    diff = edge_differences(x, graph)
    push = alpha[:, None] * diff + beta[:, None] * smoothed_sign(diff, eps1, eta_t)
    xdot = graph.incidence_matrix @ push if graph.n_edges else np.zeros_like(x)
    m = x.shape[1]
    alpha_dot = np.einsum("ij,ij->i", diff, diff)
    beta_dot = np.abs(diff).sum(axis=1) - m * eps1 * eta_t
    return xdot, alpha_dot, beta_dot


def optimizer_rhs(state, zhat, costs, graph):
    """Right-hand side ``(x', alpha', beta')`` of the optimizer."""
    x = np.asarray(state.x, dtype=float)
    if x.shape[0] != graph.n_nodes or len(costs) != graph.n_nodes:
        raise ConfigurationError(
            f"graph has {graph.n_nodes} nodes but state has {x.shape[0]} agents "
            f"and {len(costs)} costs"
        )
    if state.alpha.shape != (graph.n_edges,) or state.beta.shape != (graph.n_edges,):
        raise ConfigurationError("edge-gain arrays do not match the graph's edge count")
    terms = [c.local_terms(xi, state.t) for c, xi in zip(costs, x)]
    grads = np.array([g for g, _, _ in terms])
    grads_t = np.array([gt for _, gt, _ in terms])
    e = eta(state.t, state.eps2)
    xdot, adot, bdot = coupling(x, state.alpha, state.beta, graph, state.eps1, e)
    return xdot + feedback(grads, grads_t, np.asarray(zhat, dtype=float), state.k), adot, bdot


def k_lower_bound(assumptions, n_agents, m, general=False):
    """Infimum of admissible feedback gains (strict inequality)."""
    a = assumptions
    if general:
        if a.mu4 is None:
            raise ConfigurationError("general-cost gain rule needs mu4")
        return (a.h2 + a.mu4) * n_agents * math.sqrt(m) / a.h1**2
    return a.h2 * n_agents * math.sqrt(m) / a.h1**2


def select_k(assumptions, n_agents, m, eps_margin, general=False):
    """Feedback gain ``k`` just above the convergence bound by ``eps_margin``."""
    if not eps_margin > 0:
        raise ConfigurationError(f"eps_margin must be positive, got {eps_margin}")
    return k_lower_bound(assumptions, n_agents, m, general) + eps_margin


def warn_if_k_below_bound(k, assumptions, n_agents, m, general=False):
    if assumptions is None:
        return
    try:
        bound = k_lower_bound(assumptions, n_agents, m, general)
    except ConfigurationError:
        return
    if not k > bound:
        warnings.warn(
            f"k={k} does not exceed the gain bound {bound:.4g}; convergence is not guaranteed",
            RuntimeWarning,
            stacklevel=3,
        )
