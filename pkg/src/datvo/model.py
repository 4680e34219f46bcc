"""
scikit-learn style front end to the closed-loop simulator.

The "data" a run consumes is a set of local costs plus initial positions,
so ``fit`` integrates the closed loop and ``predict`` evaluates the fitted
agent positions at arbitrary times by linear interpolation of the record.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .costs import CostSet
from .exceptions import ConfigurationError
from .graph import graph_from_config, ring_graph
from .sim import build_cost_set, metrics, resolve_gains, simulate


class AdaptiveTrackingOptimizer(BaseEstimator):
    """Distributed time-varying optimizer with an estimated Hessian feedforward.

    Parameters
    ----------
    graph : dict or Graph, optional
        Communication graph; a ring over the agents when omitted.
    estimator_mode : {"fixed", "state"}
    omega : float, optional
        Fixed estimator gain. Required in ``"fixed"`` mode and checked
        against the cost set's ``h2``.
    state_margin : float
        Excess added to the state-based estimator gains.
    h0, gamma : float, optional
        Dead-zone floor, either directly or as ``gamma * h1 / N``.
    k : float, optional
        Feedback gain. Computed from the gain rule when omitted or when
        ``use_gain_formula`` is set.
    eps1, eps2, alpha0 : float
        Boundary-layer schedule and initial coupling gain.
    dt, t_final, record_stride, method
        Integration settings.

    Attributes
    ----------
    trajectory_ : Trajectory
    metrics_ : dict
    times_ : ndarray
    positions_ : ndarray of shape (n_samples, n_agents, dim)
    h0_, k_, omega_ : float
        Gains actually used.
    """

    def __init__(
        self,
        graph=None,
        estimator_mode="fixed",
        omega=None,
        state_margin=0.1,
        h0=None,
        gamma=None,
        k=None,
        eps_margin=1.0,
        use_gain_formula=False,
        eps1=1.0,
        eps2=1.0,
        alpha0=0.0,
        dt=1e-3,
        t_final=10.0,
        record_stride=10,
        method="imex",
        check_invariants=False,
    ):
        self.graph = graph
        self.estimator_mode = estimator_mode
        self.omega = omega
        self.state_margin = state_margin
        self.h0 = h0
        self.gamma = gamma
        self.k = k
        self.eps_margin = eps_margin
        self.use_gain_formula = use_gain_formula
        self.eps1 = eps1
        self.eps2 = eps2
        self.alpha0 = alpha0
        self.dt = dt
        self.t_final = t_final
        self.record_stride = record_stride
        self.method = method
        self.check_invariants = check_invariants

    def fit(self, X, x0=None):
        """Integrate the closed loop.

        Parameters
        ----------
        X : CostSet, dict or str
            The local costs, as a cost set or a cost-set mapping.
        x0 : array_like of shape (n_agents, dim), optional
            Physical initial positions. Defaults to the cost set's own.

        Returns
        -------
        self
        """
        cost_set = build_cost_set(X) if not isinstance(X, CostSet) else X
        n, m = cost_set.n_agents, cost_set.dim
        if x0 is None:
            if cost_set.x0 is None:
                raise ConfigurationError("no initial positions: pass x0")
            x0 = cost_set.x0
        x0 = check_array(x0, dtype=float, ensure_min_samples=1)
        if x0.shape != (n, m):
            raise ConfigurationError(f"x0 must have shape {(n, m)}, got {x0.shape}")
        graph = graph_from_config(self.graph) if self.graph is not None else ring_graph(n)
        h0, k, omega = resolve_gains(
            cost_set,
            n,
            m,
            estimator=self.estimator_mode,
            omega=self.omega,
            h0=self.h0,
            gamma=self.gamma,
            k=self.k,
            eps_margin=self.eps_margin,
            use_gain_formula=self.use_gain_formula,
        )
        offsets = cost_set.offsets
        work = x0 - offsets if offsets is not None else x0
        traj = simulate(
            cost_set.costs,
            graph,
            work,
            h0=h0,
            k=k,
            estimator_mode=self.estimator_mode,
            omega=omega,
            state_margin=self.state_margin,
            eps1=self.eps1,
            eps2=self.eps2,
            alpha0=self.alpha0,
            dt=self.dt,
            t_final=self.t_final,
            record_stride=self.record_stride,
            method=self.method,
            offsets=offsets,
            check_invariants=self.check_invariants,
        )
        traj.info["events"] = dict(cost_set.events)
        self.trajectory_ = traj
        self.metrics_ = metrics(traj)
        self.times_ = traj.times
        self.positions_ = traj.x
        self.h0_, self.k_, self.omega_ = h0, k, omega
        self.n_agents_, self.dim_ = n, m
        return self

    def predict(self, t):
        """Agent positions at times ``t``, shape ``(len(t), n_agents, dim)``.

        Times outside the fitted horizon raise ``ValueError``.
        """
        check_is_fitted(self, "trajectory_")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.ndim != 1:
            raise ValueError("t must be a scalar or a 1-D array")
        lo, hi = self.times_[0], self.times_[-1]
        if np.any((t < lo) | (t > hi)) or not np.all(np.isfinite(t)):
            raise ValueError(f"times must lie in [{lo}, {hi}]")
        flat = self.positions_.reshape(self.times_.size, -1)
        out = np.column_stack([np.interp(t, self.times_, flat[:, j]) for j in range(flat.shape[1])])
        return out.reshape(t.size, self.n_agents_, self.dim_)

    def score(self, X=None, y=None):
        """Negative terminal tracking error (larger is better)."""
        check_is_fitted(self, "metrics_")
        return -self.metrics_["terminal_tracking_error"]
