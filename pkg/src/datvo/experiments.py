"""Named experiment presets."""

import copy

from .sim import SimConfig

EXPERIMENTS = {
    # 20 heterogeneous costs on a ring, state-gain estimator, h0 = 0.5, k = 35
    "example1": SimConfig(
        cost_set={"name": "example1"},
        graph={"type": "ring", "n": 20},
        estimator="state",
        # agents 1-6 share a constant Hessian, so on their edges the state
        # gain reduces to the margin; it alone sets how fast they agree
        state_margin=10.0,
        h0=0.5,
        k=35.0,
        # beta(0) = m eps1 / eps2 = 600, about twice the peak edge flow (~255)
        eps1=1e-3,
        eps2=5e-6,
        t_final=60.0,
        seed=0,
    ),
    # six relays in formation, fixed-gain estimator, h0 = 0.1, omega = 1, k = 20
    "example2": SimConfig(
        cost_set={"name": "example2", "fade_time_constant": 2.0},
        graph={"type": "ring", "n": 6},
        estimator="fixed",
        omega=1.0,
        h0=0.1,
        k=20.0,
        # beta(0) = m eps1 / eps2 = 400, about twice the peak edge flow
        # (~212, just before agent 3 fades); eps1 sets a 1e-3 boundary layer
        eps1=1e-3,
        eps2=5e-6,
        t_final=140.0,
    ),
}


def preset(name):
    """Fresh copy of a named preset."""
    try:
        return copy.deepcopy(EXPERIMENTS[name])
    except KeyError:
        raise KeyError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}") from None
