"""
Time-varying local cost functions.

A cost ``f(x, t)`` exposes its value, its x-gradient, the time partial of
that gradient, its Hessian, and the total time derivative of the Hessian
along a trajectory with velocity ``xdot``. Two families are provided:

* :class:`QuadraticCost` -- ``1/2 x'H(t)x + R(t)'x + d(t)``,
* :class:`SeparableCost` -- ``sum_p phi(x_p, t)`` for a scalar term ``phi``,

plus :class:`SumCost` and :class:`ShiftedCost` to compose them, and the two
benchmark cost sets used by the experiments.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .exceptions import ConfigurationError

SYMMETRY_TOL = 1e-12


class CostModel:
    """Base class for a local time-varying cost on ``R^dim``."""

    dim = 1
    quadratic = False

    def value(self, x, t):
        raise NotImplementedError

    def grad(self, x, t):
        raise NotImplementedError

    def grad_time_partial(self, x, t):
        raise NotImplementedError

    def hessian(self, x, t):
        raise NotImplementedError

    def hessian_time_derivative(self, x, xdot, t):
        raise NotImplementedError

    def local_terms(self, x, t):
        """Return ``(grad, grad_time_partial, hessian)`` in one call.

        Subclasses override this when the three share work.
        """
        return self.grad(x, t), self.grad_time_partial(x, t), self.hessian(x, t)


class QuadraticCost(CostModel):
    """``f(x, t) = 1/2 x'H(t)x + R(t)'x + d(t)`` with analytic derivatives.

    Parameters
    ----------
    H, H_dot : callable
        ``t -> (m, m)`` symmetric matrix and its time derivative.
    R, R_dot : callable
        ``t -> (m,)`` vector and its time derivative.
    d : callable, optional
        ``t -> float`` offset. Only enters :meth:`value`.
    """

    quadratic = True

    def __init__(self, H, H_dot, R, R_dot, d=None):
        h0 = np.atleast_2d(np.asarray(H(0.0), dtype=float))
        if h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
            raise ConfigurationError(f"H(0) must be square, got shape {h0.shape}")
        if np.max(np.abs(h0 - h0.T), initial=0.0) > SYMMETRY_TOL:
            raise ConfigurationError("H(0) is not symmetric")
        m = h0.shape[0]
        self.dim = m
        self._H = _coerce(H, (m, m))
        self._H_dot = _coerce(H_dot, (m, m))
        self._R = _coerce(R, (m,))
        self._R_dot = _coerce(R_dot, (m,))
        self._d = d if d is not None else (lambda t: 0.0)

    def H(self, t):
        return self._H(t)

    def H_dot(self, t):
        return self._H_dot(t)

    def R(self, t):
        return self._R(t)

    def R_dot(self, t):
        return self._R_dot(t)

    def value(self, x, t):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H(t) @ x + self.R(t) @ x + self._d(t))

    def grad(self, x, t):
        return self.H(t) @ x + self.R(t)

    def grad_time_partial(self, x, t):
        return self.H_dot(t) @ x + self.R_dot(t)

    def hessian(self, x, t):
        return self.H(t)

    def hessian_time_derivative(self, x, xdot, t):
        return self.H_dot(t)

    def local_terms(self, x, t):
        h = self._H(t)
        return h @ x + self._R(t), self._H_dot(t) @ x + self._R_dot(t), h


def _coerce(fn, shape):
    """Wrap ``fn`` so it returns float arrays of ``shape`` unless it already does."""
    probe = fn(0.0)
    if isinstance(probe, np.ndarray) and probe.dtype == float and probe.shape == shape:
        return fn

    def wrapped(t):
        return np.asarray(fn(t), dtype=float).reshape(shape)

    wrapped(0.0)
    return wrapped


def zero_cost(dim):
    """Identically zero cost on ``R^dim``."""
    zm = np.zeros((dim, dim))
    zv = np.zeros(dim)
    return QuadraticCost(lambda t: zm, lambda t: zm, lambda t: zv, lambda t: zv)


class ScalarTerm:
    """Scalar function ``phi(y, t)`` applied coordinatewise.

    :meth:`derivs` returns, vectorized over ``y``::

        (phi, phi_y, phi_yy, phi_yyy, phi_ty, phi_tyy)
    """

    def derivs(self, y, t):
        raise NotImplementedError


class SeparableCost(CostModel):
    """``f(x, t) = sum_p phi(x_p, t)``; the Hessian is diagonal."""

    def __init__(self, term, dim):
        self.term = term
        self.dim = int(dim)

    def value(self, x, t):
        return float(np.sum(self.term.derivs(np.asarray(x, dtype=float), t)[0]))

    def grad(self, x, t):
        return self.term.derivs(np.asarray(x, dtype=float), t)[1]

    def grad_time_partial(self, x, t):
        return self.term.derivs(np.asarray(x, dtype=float), t)[4]

    def hessian(self, x, t):
        return np.diag(self.term.derivs(np.asarray(x, dtype=float), t)[2])

    def hessian_time_derivative(self, x, xdot, t):
        _, _, _, fyyy, _, ftyy = self.term.derivs(np.asarray(x, dtype=float), t)
        return np.diag(ftyy + fyyy * np.asarray(xdot, dtype=float))

    def local_terms(self, x, t):
        _, fy, fyy, _, fty, _ = self.term.derivs(np.asarray(x, dtype=float), t)
        return fy, fty, np.diag(fyy)


class SumCost(CostModel):
    """Pointwise sum of costs sharing a dimension."""

    def __init__(self, *parts):
        if not parts:
            raise ConfigurationError("SumCost needs at least one part")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise ConfigurationError(f"SumCost parts disagree on dimension: {dims}")
        self.parts = parts
        self.dim = dims.pop()
        self.quadratic = all(p.quadratic for p in parts)

    def value(self, x, t):
        return sum(p.value(x, t) for p in self.parts)

    def grad(self, x, t):
        return sum(p.grad(x, t) for p in self.parts)

    def grad_time_partial(self, x, t):
        return sum(p.grad_time_partial(x, t) for p in self.parts)

    def hessian(self, x, t):
        return sum(p.hessian(x, t) for p in self.parts)

    def hessian_time_derivative(self, x, xdot, t):
        return sum(p.hessian_time_derivative(x, xdot, t) for p in self.parts)

    def local_terms(self, x, t):
        terms = [p.local_terms(x, t) for p in self.parts]
        return tuple(sum(col) for col in zip(*terms))


class ShiftedCost(CostModel):
    """``f(y, t) = base(y + offset, t)``.

    Used to turn a formation constraint ``x_i - x_j = tau_i - tau_j`` into an
    unconstrained consensus problem on ``y_i = x_i - tau_i``.
    """

    def __init__(self, base, offset):
        self.base = base
        self.offset = np.asarray(offset, dtype=float)
        self.dim = base.dim
        self.quadratic = base.quadratic

    def value(self, x, t):
        return self.base.value(np.asarray(x) + self.offset, t)

    def grad(self, x, t):
        return self.base.grad(np.asarray(x) + self.offset, t)

    def grad_time_partial(self, x, t):
        return self.base.grad_time_partial(np.asarray(x) + self.offset, t)

    def hessian(self, x, t):
        return self.base.hessian(np.asarray(x) + self.offset, t)

    def hessian_time_derivative(self, x, xdot, t):
        return self.base.hessian_time_derivative(np.asarray(x) + self.offset, xdot, t)

    def local_terms(self, x, t):
        return self.base.local_terms(np.asarray(x) + self.offset, t)


@dataclass(frozen=True)
class CostAssumptions:
    """Known constants of a cost set.

    ``h1`` is the uniform strong-convexity floor of the global cost (``mu1``
    for non-quadratic sets), ``h2`` bounds every ``|dH_i/dt|_inf`` and
    ``mu4`` bounds the x-linear part of the non-quadratic time partial.
    ``mu2``, ``mu3``, ``mu5`` are carried as metadata only.
    """

    h1: float
    h2: float
    mu4: float = None
    mu2: float = None
    mu3: float = None
    mu5: float = None

    def __post_init__(self):
        if not self.h1 > 0:
            raise ConfigurationError(f"h1 must be positive, got {self.h1}")
        if not self.h2 >= 0:
            raise ConfigurationError(f"h2 must be nonnegative, got {self.h2}")
        if self.mu4 is not None and not self.mu4 >= 0:
            raise ConfigurationError(f"mu4 must be nonnegative, got {self.mu4}")


@dataclass
class CostSet:
    """A named collection of local costs plus everything a run needs.

    ``costs`` are the functions the agents optimize. For formation problems
    they are already shifted by ``offsets`` so that physical positions are
    ``x_i = y_i + offsets[i]``.
    """

    name: str
    costs: list
    assumptions: CostAssumptions
    offsets: np.ndarray = None
    x0: np.ndarray = None
    events: dict = field(default_factory=dict)
    raw_costs: list = None

    @property
    def n_agents(self):
        return len(self.costs)

    @property
    def dim(self):
        return self.costs[0].dim

    @property
    def quadratic(self):
        return all(c.quadratic for c in self.costs)


# ---------------------------------------------------------------------------
# scalar terms of the first benchmark


class _Sine(ScalarTerm):
    def derivs(self, y, t):
        s, c = np.sin(y), np.cos(y)
        z = np.zeros_like(y)
        return s, c, -s, -c, z, z


class _TimeScaledSoftplus(ScalarTerm):
    # (tanh t + 1) * log(1 + e^y)
    def derivs(self, y, t):
        a = math.tanh(t) + 1.0
        a_dot = 1.0 / math.cosh(t) ** 2 if t < 350 else 0.0
        sig = 0.5 * (1.0 + np.tanh(0.5 * y))
        s1 = sig * (1.0 - sig)
        s2 = s1 * (1.0 - 2.0 * sig)
        return a * np.logaddexp(0.0, y), a * sig, a * s1, a * s2, a_dot * sig, a_dot * s1


class _Rational(ScalarTerm):
    # y / (y^2 + 1)
    def derivs(self, y, t):
        q = 1.0 + y * y
        z = np.zeros_like(y)
        return (
            y / q,
            (1.0 - y * y) / q**2,
            2.0 * y * (y * y - 3.0) / q**3,
            (-6.0 * y**4 + 36.0 * y * y - 6.0) / q**4,
            z,
            z,
        )


class _DecayingGaussianWell(ScalarTerm):
    # -(1 / (t + 1)) * exp(-y^2)
    def derivs(self, y, t):
        b = -1.0 / (t + 1.0)
        b_dot = 1.0 / (t + 1.0) ** 2
        e = np.exp(-y * y)
        g1 = -2.0 * y * e
        g2 = (4.0 * y * y - 2.0) * e
        g3 = (12.0 * y - 8.0 * y**3) * e
        return b * e, b * g1, b * g2, b * g3, b_dot * g1, b_dot * g2


class _QuadraticPlusLogBarrier(ScalarTerm):
    # y^2 + exp(-t) log(1 + y^2)
    def derivs(self, y, t):
        c = math.exp(-t)
        q = 1.0 + y * y
        l1 = 2.0 * y / q
        l2 = 2.0 * (1.0 - y * y) / q**2
        l3 = (4.0 * y**3 - 12.0 * y) / q**3
        return (
            y * y + c * np.log(q),
            2.0 * y + c * l1,
            2.0 + c * l2,
            c * l3,
            -c * l1,
            -c * l2,
        )


EXAMPLE1_H1 = 19.5
EXAMPLE1_H2 = 2.4


def example1_costs():
    """Twenty heterogeneous costs on ``R^3`` (ring network benchmark).

    Agents 1-6 are strongly convex quadratics, 7-12 rank-one convex
    quadratics with a rotating direction, and 13-20 a mix of time-decaying,
    indefinite, non-convex and non-quadratic separable terms. Only the sum is
    strongly convex.

    Returns
    -------
    CostSet
        ``assumptions.h1 = 19.5`` is a certified floor for the smallest
        eigenvalue of the summed Hessian (the coordinatewise worst case of
        the non-quadratic terms is about 19.77); ``h2 = 2.4`` bounds the
        entries of every quadratic Hessian rate.
    """
    m = 3
    ones = np.ones(m)
    eye = np.eye(m)
    zm = np.zeros((m, m))
    zv = np.zeros(m)
    costs = []

    for i in range(1, 7):
        w = 0.1 * i
        costs.append(
            QuadraticCost(
                lambda t: 4.0 * eye,
                lambda t: zm,
                lambda t, w=w: w * math.sin(t) * ones,
                lambda t, w=w: w * math.cos(t) * ones,
            )
        )

    for i in range(7, 13):
        w = 0.1 * i

        def H(t, w=w):
            a = np.array([1.0, math.cos(t), w])
            return 2.0 * np.outer(a, a)

        def H_dot(t, w=w):
            a = np.array([1.0, math.cos(t), w])
            a_dot = np.array([0.0, -math.sin(t), 0.0])
            p = np.outer(a_dot, a)
            return 2.0 * (p + p.T)

        costs.append(
            QuadraticCost(
                H,
                H_dot,
                lambda t, w=w: np.array([math.cos(t), w, 1.0]),
                lambda t: np.array([-math.sin(t), 0.0, 0.0]),
            )
        )

    costs.append(  # f13
        QuadraticCost(
            lambda t: 2.0 * math.exp(-t) * eye,
            lambda t: -2.0 * math.exp(-t) * eye,
            lambda t: zv,
            lambda t: zv,
        )
    )
    costs.append(  # f14
        QuadraticCost(
            lambda t: 2.0 * math.sin(t) * eye,
            lambda t: 2.0 * math.cos(t) * eye,
            lambda t: zv,
            lambda t: zv,
        )
    )
    costs.append(  # f15 = -sum (y - 2)^2
        QuadraticCost(
            lambda t: -2.0 * eye,
            lambda t: zm,
            lambda t: 4.0 * ones,
            lambda t: zv,
            lambda t: -4.0 * m,
        )
    )
    for term in (
        _Sine(),
        _TimeScaledSoftplus(),
        _Rational(),
        _DecayingGaussianWell(),
        _QuadraticPlusLogBarrier(),
    ):
        costs.append(SeparableCost(term, m))

    assumptions = CostAssumptions(h1=EXAMPLE1_H1, h2=EXAMPLE1_H2, mu4=0.0)
    return CostSet("example1", costs, assumptions)


# ---------------------------------------------------------------------------
# second benchmark: relay positioning with fading signal coefficients

EXAMPLE2_TAU = np.array(
    [[5.0, 10.0], [10.0, 0.0], [5.0, -10.0], [-5.0, 10.0], [-10.0, 0.0], [-5.0, 10.0]]
)
EXAMPLE2_X0 = np.array(
    [[-5.0, 10.0], [-15.0, 10.0], [-25.0, 10.0], [-25.0, 0.0], [-15.0, 0.0], [-5.0, 0.0]]
)
EXAMPLE2_P0 = 2.0
EXAMPLE2_ATTACK_TIME = 67.0
DEFAULT_FADE_TIME_CONSTANT = 2.0


def power_drop_time(p, p0, horizon=1e3, n_grid=10001):
    """First time at which ``p(t) < p0``; ``inf`` if it never happens."""
    ts = np.linspace(0.0, horizon, n_grid)
    vals = np.array([p(t) - p0 for t in ts])
    below = np.flatnonzero(vals < 0)
    if below.size == 0:
        return math.inf
    k = below[0]
    if k == 0:
        return 0.0
    return brentq(lambda t: p(t) - p0, ts[k - 1], ts[k], xtol=1e-14)


class FadedInverse:
    """Coefficient ``c(t) = 1/p(t)`` that decays to zero after ``t_off``.

    After the trigger the coefficient follows the response of a first-order
    lag ``c' = -c / tau_f`` started from ``1/p(t_off)``.
    """

    def __init__(self, p, p_dot, t_off=math.inf, tau_f=DEFAULT_FADE_TIME_CONSTANT):
        if not tau_f > 0:
            raise ConfigurationError(f"fade time constant must be positive, got {tau_f}")
        self.p = p
        self.p_dot = p_dot
        self.t_off = t_off
        self.tau_f = tau_f
        self._c_off = 1.0 / p(t_off) if math.isfinite(t_off) else 0.0
        self._last = (None, 0.0, 0.0)

    def _eval(self, t):
        if self._last[0] != t:
            if t < self.t_off:
                pt = self.p(t)
                c = 1.0 / pt
                c_dot = -self.p_dot(t) / (pt * pt)
            else:
                c = self._c_off * math.exp(-(t - self.t_off) / self.tau_f)
                c_dot = -c / self.tau_f
            self._last = (t, c, c_dot)
        return self._last

    def __call__(self, t):
        return self._eval(t)[1]

    def derivative(self, t):
        return self._eval(t)[2]


class _RelayCost(QuadraticCost):
    """Quadratic cost ``c(t) |x - q(t)|^2`` with a fused ``local_terms``."""

    def __init__(self, coef, target, target_dot, *handles):
        super().__init__(*handles)
        self._coef = coef
        self._q = target
        self._q_dot = target_dot
        self._eye = np.eye(self.dim)

    def local_terms(self, x, t):
        _, c, c_dot = self._coef._eval(t)
        r = x - self._q(t)
        g = 2.0 * c * r
        gt = 2.0 * c_dot * r - 2.0 * c * self._q_dot(t)
        return g, gt, (2.0 * c) * self._eye


def relay_cost(coef, target, target_dot):
    """``f(x, t) = c(t) |x - target(t)|^2`` as a quadratic cost on ``R^2``."""
    eye = np.eye(2)

    def R(t):
        return -2.0 * coef(t) * target(t)

    def R_dot(t):
        return -2.0 * (coef.derivative(t) * target(t) + coef(t) * target_dot(t))

    def d(t):
        q = target(t)
        return coef(t) * float(q @ q)

    return _RelayCost(
        coef,
        target,
        target_dot,
        lambda t: 2.0 * coef(t) * eye,
        lambda t: 2.0 * coef.derivative(t) * eye,
        R,
        R_dot,
        d,
    )


def example2_costs(fade_time_constant=DEFAULT_FADE_TIME_CONSTANT):
    """Six relay-positioning costs on ``R^2`` with two cost dropouts.

    Robot 3's power ``10 exp(-0.05 t)`` falls below ``p0 = 2`` near
    ``t = 32.19`` s and robot 5 is disabled at ``t = 67`` s; in both cases
    the coefficient ``1/p_i`` is faded to zero with the given lag time
    constant.

    Returns
    -------
    CostSet
        ``costs`` are shifted by the formation offsets, ``raw_costs`` are the
        physical-coordinate costs, ``x0`` the physical initial positions and
        ``events`` the two fade trigger times.
    """
    if not fade_time_constant > 0:
        raise ConfigurationError(f"fade_time_constant must be positive, got {fade_time_constant}")
    tf = float(fade_time_constant)

    def const(v):
        return lambda t: v

    zero = const(0.0)
    w = 0.3
    p = [
        (const(10.0), zero),
        (const(10.0), zero),
        (lambda t: 10.0 * math.exp(-0.05 * t), lambda t: -0.5 * math.exp(-0.05 * t)),
        (const(8.0), zero),
        (lambda t: 10.0 / (1.0 + 0.06 * t), lambda t: -0.6 / (1.0 + 0.06 * t) ** 2),
        (lambda t: 6.0 + math.sin(w * t), lambda t: w * math.cos(w * t)),
    ]
    zv = np.zeros(2)
    d = [
        (const(np.array([30.0, 30.0])), const(zv)),
        (
            lambda t: np.array([30.0 + 10.0 * math.cos(w * t), 0.0]),
            lambda t: np.array([-10.0 * w * math.sin(w * t), 0.0]),
        ),
        (const(np.array([-30.0, -30.0])), const(zv)),
        (
            lambda t: np.array([-30.0, -30.0 + 10.0 * math.sin(w * t)]),
            lambda t: np.array([0.0, 10.0 * w * math.cos(w * t)]),
        ),
        (const(np.array([-30.0, 0.0])), const(zv)),
        (const(np.array([-30.0, 30.0])), const(zv)),
    ]

    t_drop = power_drop_time(p[2][0], EXAMPLE2_P0)
    off = [math.inf] * 6
    off[2] = t_drop
    off[4] = EXAMPLE2_ATTACK_TIME
    coefs = [FadedInverse(pi, pdi, t_off=o, tau_f=tf) for (pi, pdi), o in zip(p, off)]

    raw = [relay_cost(c, di, ddi) for c, (di, ddi) in zip(coefs, d)]
    shifted = [ShiftedCost(r, tau) for r, tau in zip(raw, EXAMPLE2_TAU)]

    # strong convexity survives on agents 1, 2, 4, 6 once both fades complete
    h1 = 2.0 * (0.1 + 0.1 + 0.125 + 1.0 / 7.0)
    # steepest Hessian rate: start of either fade, 2 c(t_off) / tau_f
    h2 = max(2.0 * coefs[2](t_drop), 2.0 * coefs[4](EXAMPLE2_ATTACK_TIME)) / tf
    assumptions = CostAssumptions(h1=h1, h2=h2)
    return CostSet(
        "example2",
        shifted,
        assumptions,
        offsets=EXAMPLE2_TAU.copy(),
        x0=EXAMPLE2_X0.copy(),
        events={"agent3_fade": t_drop, "agent5_fade": EXAMPLE2_ATTACK_TIME},
        raw_costs=raw,
    )


def fade_coefficients(cost_set, t):
    """Coefficients ``c_i(t)`` of an example-2 cost set (diagnostics)."""
    return np.array([0.5 * c.H(t)[0, 0] for c in cost_set.raw_costs])


# ---------------------------------------------------------------------------
# derivative checks


def _rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b), initial=0.0) / max(1.0, np.max(np.abs(b), initial=0.0)))


def fd_check(cost, x, t, step=1e-5, xdot=None):
    """Largest relative mismatch between analytic and central-difference derivatives.

    Checks ``grad`` against the value, ``grad_time_partial`` against the
    gradient, ``hessian`` against the gradient and
    ``hessian_time_derivative`` against the Hessian along ``(x + s xdot, t + s)``.
    Relative errors are taken as ``max|a - b| / max(1, max|b|)``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    m = x.size
    xdot = np.ones(m) if xdot is None else np.asarray(xdot, dtype=float)
    h = step
    eye = np.eye(m)

    g_fd = np.array(
        [(cost.value(x + h * e, t) - cost.value(x - h * e, t)) / (2 * h) for e in eye]
    )
    gt_fd = (cost.grad(x, t + h) - cost.grad(x, t - h)) / (2 * h)
    hess_fd = np.column_stack(
        [(cost.grad(x + h * e, t) - cost.grad(x - h * e, t)) / (2 * h) for e in eye]
    )
    hdot_fd = (
        cost.hessian(x + h * xdot, t + h) - cost.hessian(x - h * xdot, t - h)
    ) / (2 * h)

    return max(
        _rel_err(cost.grad(x, t), g_fd),
        _rel_err(cost.grad_time_partial(x, t), gt_fd),
        _rel_err(cost.hessian(x, t), hess_fd),
        _rel_err(cost.hessian_time_derivative(x, xdot, t), hdot_fd),
    )
