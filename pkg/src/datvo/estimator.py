"""
Finite-time average estimation of the mean Hessian and the dead-zone filter.

Each agent keeps a matrix state ``xi_i`` and outputs ``z_i = xi_i + H_i``.
Neighbours push their outputs together with hard signum couplings, so
``sum_i xi_i`` is conserved and every ``z_i`` reaches the network mean of
the ``H_i`` in finite time. The dead-zone filter then replaces any ``z_i``
that is too close to singular with the last safe value, which keeps
``z_hat_i^{-1}`` well defined for the optimizer.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, GainViolationError, SymmetryViolationError

SYMMETRY_TOL = 1e-9
FIXED = "fixed"
STATE = "state"


def matrix_sign(a):
    """Elementwise signum with ``sgn(0) = 0``."""
    return np.sign(a)


def asymmetry(z):
    """``max |z - z^T|`` over the trailing two axes."""
    z = np.asarray(z, dtype=float)
    return float(np.max(np.abs(z - np.swapaxes(z, -1, -2)), initial=0.0))


def _symmetrized(z, tol=SYMMETRY_TOL):
    z = np.asarray(z, dtype=float)
    if asymmetry(z) >= tol:
        raise SymmetryViolationError(f"matrix asymmetry {asymmetry(z):.3e} exceeds {tol:g}")
    return 0.5 * (z + np.swapaxes(z, -1, -2))


def min_abs_eig(z):
    """Smallest eigenvalue magnitude of a symmetric matrix (or a stack of them)."""
    lam = np.linalg.eigvalsh(_symmetrized(z))
    out = np.min(np.abs(lam), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def dza(z, hold, h0, is_initial):
    """Dead-zone filter for one agent.

    Parameters
    ----------
    z : (m, m) array
        Current estimator output, symmetric.
    hold : (m, m) array
        Last safe value. Start it at ``h0 * I``.
    h0 : float
        Floor on the smallest eigenvalue magnitude of the output.
    is_initial : bool
        At the initial instant a safe ``z`` is passed through without
        being latched.

    Returns
    -------
    z_hat, hold : (m, m) arrays
        Filter output and the updated hold register.
    """
    if not h0 > 0:
        raise ConfigurationError(f"h0 must be positive, got {h0}")
    zs = _symmetrized(z)
    if min_abs_eig(zs) < h0:
        return np.array(hold, dtype=float), hold
    if is_initial:
        return zs, hold
    return zs, zs.copy()


class DeadZone:
    """Vectorized dead-zone filter over ``n_agents`` hold registers."""

    def __init__(self, n_agents, dim, h0):
        if not h0 > 0:
            raise ConfigurationError(f"h0 must be positive, got {h0}")
        self.h0 = float(h0)
        self.hold = np.broadcast_to(self.h0 * np.eye(dim), (n_agents, dim, dim)).copy()
        self.hold_margin = np.full(n_agents, self.h0)
        self.last_asymmetry = 0.0

    def __call__(self, z, is_initial=False):
        """Filter a stack ``z`` of shape ``(n, m, m)``.

        Returns ``(z_hat, margins)`` where ``margins[i]`` is the smallest
        eigenvalue magnitude of ``z_hat[i]``.
        """
        z = np.asarray(z, dtype=float)
        self.last_asymmetry = asymmetry(z)
        if self.last_asymmetry >= SYMMETRY_TOL:
            raise SymmetryViolationError(
                f"matrix asymmetry {self.last_asymmetry:.3e} exceeds {SYMMETRY_TOL:g}"
            )
        zs = 0.5 * (z + np.swapaxes(z, -1, -2))
        lam0 = np.min(np.abs(np.linalg.eigvalsh(zs)), axis=-1)
        safe = lam0 >= self.h0
        zhat = np.where(safe[:, None, None], zs, self.hold)
        margins = np.where(safe, lam0, self.hold_margin)
        if not is_initial and safe.any():
            self.hold[safe] = zs[safe]
            self.hold_margin[safe] = lam0[safe]
        return zhat, margins


def select_h0(h1, n_agents, gamma):
    """Dead-zone floor ``gamma * h1 / N`` for ``0 < gamma < 1``."""
    if not 0.0 < gamma < 1.0:
        raise ConfigurationError(f"gamma must lie in (0, 1), got {gamma}")
    if not h1 > 0:
        raise ConfigurationError(f"h1 must be positive, got {h1}")
    return gamma * h1 / n_agents


def check_fixed_gain(omega, h2):
    if h2 is None:
        raise ConfigurationError("fixed-gain estimator needs a known h2 to validate omega")
    if not omega > h2:
        raise GainViolationError(f"estimator gain omega={omega} must exceed h2={h2}")


def _edge_signs(z, graph):
    return matrix_sign(z[graph.sources] - z[graph.targets])


def _scatter(flows, graph, n):
    """Antisymmetric accumulation: ``-flow`` at the source, ``+flow`` at the target."""
    if graph.n_edges == 0:
        return np.zeros((n,) + flows.shape[1:])
    return np.tensordot(graph.incidence_matrix, flows, axes=(1, 0))


def fixed_gain_rhs(xi, hessians, graph, omega):
    """``xi_i' = -omega sum_{j in N_i} sgn(z_i - z_j)`` with ``z = xi + H``."""
    z = np.asarray(xi) + np.asarray(hessians)
    return omega * _scatter(_edge_signs(z, graph), graph, z.shape[0])


def state_gains(hess_dot_bounds, graph, margin):
    """Per-edge gains ``(N-1)/2 (b_i + b_j) + margin``."""
    if not margin >= 0:
        raise ConfigurationError(f"state-gain margin must be nonnegative, got {margin}")
    b = np.asarray(hess_dot_bounds, dtype=float)
    n = graph.n_nodes
    return 0.5 * (n - 1) * (b[graph.sources] + b[graph.targets]) + margin


def state_gain_rhs(xi, hessians, hess_dot_bounds, graph, margin):
    """``xi_i' = -sum_j omega_ij sgn(z_i - z_j)`` with state-based ``omega_ij``.

    Returns ``(xi_dot, omega)`` where ``omega`` has one entry per edge.
    """
    z = np.asarray(xi) + np.asarray(hessians)
    w = state_gains(hess_dot_bounds, graph, margin)
    flows = w[:, None, None] * _edge_signs(z, graph)
    return _scatter(flows, graph, z.shape[0]), w


def hess_dot_bound(hess_dot):
    """Entrywise max norm ``|A|_inf`` of each matrix in a stack."""
    a = np.abs(np.asarray(hess_dot, dtype=float))
    return a.reshape(a.shape[:-2] + (-1,)).max(axis=-1)


@dataclass
class EstimatorState:
    """Per-agent estimator variables.

    ``omega`` is the fixed gain in ``"fixed"`` mode and the state-gain
    margin in ``"state"`` mode.
    """

    xi: np.ndarray
    hold: np.ndarray
    omega: float
    mode: str = FIXED

    @classmethod
    def initial(cls, n_agents, dim, h0, omega, mode=FIXED):
        if mode not in (FIXED, STATE):
            raise ConfigurationError(f"unknown estimator mode {mode!r}")
        xi = np.zeros((n_agents, dim, dim))
        hold = np.broadcast_to(h0 * np.eye(dim), (n_agents, dim, dim)).copy()
        return cls(xi, hold, omega, mode)
