"""
Invariant suite behind ``datvo validate``.

Each check returns a :class:`CheckResult`. Checks never raise for a failed
property; a library error inside a check is reported as a failure with the
error message as detail.
"""

from dataclasses import dataclass

import numpy as np

from .costs import example1_costs, example2_costs, fd_check
from .estimator import DeadZone, min_abs_eig
from .graph import (
    Graph,
    complete_graph,
    incidence,
    is_connected_bfs,
    is_connected_spectral,
    laplacian,
    path_graph,
    ring_graph,
)
from .sim import optimal_trajectory, optimality_residuals, simulate

FD_TOL = 1e-5
CONSERVATION_TOL = 1e-5
SYMMETRY_TOL = 1e-9
ALPHA_ROUNDOFF = 1e-12


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""

    def line(self):
        tag = "PASS" if self.ok else "FAIL"
        return f"{tag}  {self.name}" + (f"  ({self.detail})" if self.detail else "")


def check_graph_identities(seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for g in (ring_graph(7), complete_graph(5), path_graph(6)):
        d = incidence(g)
        worst = max(worst, float(np.abs(d @ d.T - laplacian(g)).max()))
    disagree = 0
    for _ in range(50):
        n = int(rng.integers(2, 9))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
        g = Graph(n, tuple(edges))
        disagree += is_connected_bfs(g) != is_connected_spectral(g)
    ok = worst == 0.0 and disagree == 0
    return CheckResult("graph: D D^T = L and BFS/spectral connectivity agree", ok,
                       f"max|DD^T-L|={worst:g}, disagreements={disagree}")


def check_derivatives(samples=20, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    models = list(example1_costs().costs) + list(example2_costs().costs)
    for c in models:
        for _ in range(samples):
            x = rng.uniform(-3.0, 3.0, c.dim)
            v = rng.uniform(-1.0, 1.0, c.dim)
            t = float(rng.uniform(0.0, 100.0))
            worst = max(worst, fd_check(c, x, t, xdot=v))
    return CheckResult(f"costs: finite-difference check on {len(models)} models",
                       worst < FD_TOL, f"worst={worst:.2e}")


def adversarial_z_sequence(m=3, steps=400):
    """Symmetric matrices whose eigenvalues sweep through zero and back."""
    q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(m, m)))
    seq = []
    for s in np.linspace(-1.0, 1.0, steps):
        lam = np.array([s, 2.0 * s - 0.3, 1.0 - s])[:m]
        seq.append(q @ np.diag(lam) @ q.T)
    return np.array(seq)


def check_dead_zone_floor(h0=0.25):
    seq = adversarial_z_sequence()
    dz = DeadZone(1, seq.shape[1], h0)
    worst = np.inf
    for n, z in enumerate(seq):
        zhat, _ = dz(z[None], is_initial=(n == 0))
        worst = min(worst, min_abs_eig(zhat[0]))
    return CheckResult("dead zone: floor on a sequence crossing singularity",
                       worst >= h0, f"min|lambda|={worst:.4g}, h0={h0}")


def _short_example2(xi0=None, t_final=5.0):
    cs = example2_costs()
    return simulate(cs.costs, ring_graph(6), cs.x0 - cs.offsets, h0=0.1, k=20.0, omega=1.0,
                    eps1=1e-3, eps2=5e-6, dt=1e-3, t_final=t_final, offsets=cs.offsets,
                    xi0=xi0, oracle=False)


def check_estimator_structure(xi0=None):
    try:
        traj = _short_example2(xi0)
    except ValueError as exc:
        return CheckResult("estimator: sum of xi conserved and z symmetric", False, str(exc))
    mon = traj.monitors
    ok = mon["max_xi_sum"] < CONSERVATION_TOL and mon["max_z_asymmetry"] < SYMMETRY_TOL
    return CheckResult("estimator: sum of xi conserved and z symmetric", ok,
                       f"max|sum xi|={mon['max_xi_sum']:.2e}, "
                       f"max asym={mon['max_z_asymmetry']:.2e}")


def check_gain_laws():
    traj = _short_example2()
    mon = traj.monitors
    ok = (mon["max_alpha_decrease"] <= ALPHA_ROUNDOFF and mon["min_beta"] >= 0.0
          and np.all(traj.beta[0] == mon["beta0"]))
    return CheckResult("optimizer: alpha nondecreasing, beta >= 0 from m eps1/eps2", ok,
                       f"alpha drop={mon['max_alpha_decrease']:.1e}, "
                       f"min beta={mon['min_beta']:.4g}")


def check_oracle():
    cs2 = example2_costs()
    ts = np.linspace(0.0, 140.0, 141)
    direct = optimal_trajectory(cs2.costs, ts, method="direct")
    newton = optimal_trajectory(cs2.costs, ts, method="newton")
    agree = float(np.abs(direct - newton).max())
    cs1 = example1_costs()
    ts1 = np.linspace(0.0, 60.0, 121)
    res = float(optimality_residuals(cs1.costs, ts1, optimal_trajectory(cs1.costs, ts1)).max())
    ok = agree < 1e-9 and res < 1e-8
    return CheckResult("oracle: direct vs Newton agree and gradient vanishes", ok,
                       f"agreement={agree:.1e}, residual={res:.1e}")


def run_suite(inject_asymmetric_xi0=False):
    """Run every check and return the list of results."""
    xi0 = None
    if inject_asymmetric_xi0:
        xi0 = np.random.default_rng(2).normal(size=(6, 2, 2))
    checks = [
        check_graph_identities,
        check_derivatives,
        check_dead_zone_floor,
        lambda: check_estimator_structure(xi0),
        check_gain_laws,
        check_oracle,
    ]
    results = []
    for chk in checks:
        try:
            results.append(chk())
        except Exception as exc:  # report, never abort the suite
            results.append(CheckResult(getattr(chk, "__name__", "check"), False, repr(exc)))
    return results
