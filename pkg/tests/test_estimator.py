import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from datvo.estimator import (
    DeadZone,
    EstimatorState,
    check_fixed_gain,
    dza,
    fixed_gain_rhs,
    hess_dot_bound,
    matrix_sign,
    min_abs_eig,
    select_h0,
    state_gain_rhs,
    state_gains,
)
from datvo.exceptions import ConfigurationError, GainViolationError, SymmetryViolationError
from datvo.graph import complete_graph, path_graph, ring_graph
from datvo.sim import _implicit_sign_consensus
from datvo.validation import adversarial_z_sequence


def test_matrix_sign_examples():
    np.testing.assert_array_equal(matrix_sign(np.array([[2.0, -3.0], [0.0, 1.0]])), [[1, -1], [0, 1]])
    np.testing.assert_array_equal(matrix_sign(np.zeros((3, 3))), np.zeros((3, 3)))
    a = np.array([[1.0, -2.0], [-2.0, 0.0]])
    s = matrix_sign(a)
    np.testing.assert_array_equal(s, s.T)


def test_fixed_gain_consensus_is_still():
    xi = np.zeros((4, 2, 2))
    h = np.broadcast_to(np.eye(2), (4, 2, 2))
    np.testing.assert_array_equal(fixed_gain_rhs(xi, h, ring_graph(4), 3.0), 0.0)


def test_fixed_gain_two_agents():
    xi = np.array([[[1.0]], [[0.0]]])
    out = fixed_gain_rhs(xi, np.zeros((2, 1, 1)), path_graph(2), 2.0)
    np.testing.assert_array_equal(out[:, 0, 0], [-2.0, 2.0])


def test_state_gains_examples():
    g = path_graph(2)
    np.testing.assert_array_equal(state_gains([0.0, 0.0], g, 1.0), [1.0])
    # six agents, bounds 2 and 4 on one edge
    g6 = ring_graph(6)
    b = np.zeros(6)
    b[0], b[1] = 2.0, 4.0
    w = state_gains(b, g6, 0.1)
    assert w[g6.edges.index((0, 1))] == pytest.approx(15.1)


def test_state_gain_negative_margin():
    with pytest.raises(ConfigurationError):
        state_gains([0.0, 0.0], path_graph(2), -0.1)


def test_state_gain_rhs_zero_at_consensus():
    xi = np.zeros((5, 3, 3))
    h = np.broadcast_to(np.diag([1.0, 2.0, 3.0]), (5, 3, 3))
    out, w = state_gain_rhs(xi, h, np.arange(5.0), ring_graph(5), 0.5)
    np.testing.assert_array_equal(out, 0.0)
    assert w.shape == (5,)


def test_hess_dot_bound_is_entrywise_max():
    a = np.array([[[1.0, -3.0], [-3.0, 2.0]], [[0.5, 0.0], [0.0, -0.1]]])
    np.testing.assert_array_equal(hess_dot_bound(a), [3.0, 0.5])


def test_dza_initial_singular_gives_floor():
    hold = 0.5 * np.eye(2)
    zhat, new_hold = dza(np.zeros((2, 2)), hold, 0.5, is_initial=True)
    np.testing.assert_array_equal(zhat, 0.5 * np.eye(2))
    np.testing.assert_array_equal(new_hold, hold)


def test_dza_safe_value_latched():
    zhat, hold = dza(2.0 * np.eye(2), 0.5 * np.eye(2), 0.5, is_initial=False)
    np.testing.assert_array_equal(zhat, 2.0 * np.eye(2))
    np.testing.assert_array_equal(hold, 2.0 * np.eye(2))


def test_dza_initial_safe_passes_without_latch():
    zhat, hold = dza(2.0 * np.eye(2), 0.5 * np.eye(2), 0.5, is_initial=True)
    np.testing.assert_array_equal(zhat, 2.0 * np.eye(2))
    np.testing.assert_array_equal(hold, 0.5 * np.eye(2))


def test_dza_hold_sequence():
    hold = 0.5 * np.eye(2)
    _, hold = dza(3.0 * np.eye(2), hold, 0.5, is_initial=False)
    zhat, _ = dza(np.zeros((2, 2)), hold, 0.5, is_initial=False)
    np.testing.assert_array_equal(zhat, 3.0 * np.eye(2))


def test_dza_rejects_asymmetry():
    with pytest.raises(SymmetryViolationError):
        dza(np.array([[1.0, 1.0], [0.0, 1.0]]), np.eye(2), 0.5, False)
    with pytest.raises(ConfigurationError):
        dza(np.eye(2), np.eye(2), 0.0, False)


def test_dead_zone_matches_scalar_filter():
    seq = adversarial_z_sequence()
    dz = DeadZone(1, 3, 0.25)
    hold = 0.25 * np.eye(3)
    for n, z in enumerate(seq):
        a, _ = dz(z[None], is_initial=(n == 0))
        b, hold = dza(z, hold, 0.25, n == 0)
        np.testing.assert_array_equal(a[0], b)


def test_dead_zone_floor_on_adversarial_sequence():
    seq = adversarial_z_sequence()
    dz = DeadZone(1, 3, 0.25)
    margins = [dz(z[None], is_initial=(n == 0))[1][0] for n, z in enumerate(seq)]
    assert min(margins) >= 0.25


def test_min_abs_eig_examples():
    assert min_abs_eig(np.diag([-3.0, 0.2, 5.0])) == pytest.approx(0.2)
    assert min_abs_eig(np.zeros((3, 3))) == 0.0
    assert min_abs_eig(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0)


def test_select_h0():
    assert select_h0(24.0, 20, 0.4) == pytest.approx(0.48)
    assert select_h0(20.0, 20, 1.0 - 1e-12) == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        select_h0(24.0, 20, 1.5)
    with pytest.raises(ConfigurationError):
        select_h0(24.0, 20, 0.0)


def test_check_fixed_gain():
    check_fixed_gain(1.0, 0.99)
    with pytest.raises(GainViolationError):
        check_fixed_gain(1.0, 1.0)
    with pytest.raises(ConfigurationError):
        check_fixed_gain(1.0, None)


def test_initial_state():
    st0 = EstimatorState.initial(3, 2, 0.1, 1.0)
    np.testing.assert_array_equal(st0.xi, 0.0)
    np.testing.assert_array_equal(st0.hold[2], 0.1 * np.eye(2))
    with pytest.raises(ConfigurationError):
        EstimatorState.initial(3, 2, 0.1, 1.0, mode="adaptive")


def _sym_stack(n, m):
    return arrays(np.float64, (n, m, m), elements=st.floats(-5, 5)).map(
        lambda a: 0.5 * (a + np.swapaxes(a, 1, 2))
    )


@settings(max_examples=100, deadline=None)
@given(_sym_stack(5, 2), _sym_stack(5, 2), st.floats(0.1, 5.0))
def test_fixed_gain_rhs_sums_to_zero_and_is_symmetric(xi, h, omega):
    g = complete_graph(5)
    out = fixed_gain_rhs(xi, h, g, omega)
    np.testing.assert_allclose(out.sum(axis=0), 0.0, atol=1e-12)
    np.testing.assert_array_equal(out, np.swapaxes(out, 1, 2))


@settings(max_examples=100, deadline=None)
@given(_sym_stack(6, 2), _sym_stack(6, 2), st.floats(1e-4, 1e-2))
def test_implicit_step_conserves_and_stays_symmetric(z_prev, target, dt):
    g = ring_graph(6)
    out = _implicit_sign_consensus(z_prev, target, np.full(g.n_edges, 1.0), g, dt)
    np.testing.assert_allclose(out.sum(axis=0), target.sum(axis=0), atol=1e-10)
    np.testing.assert_array_equal(out, np.swapaxes(out, 1, 2))


def test_implicit_step_does_not_overshoot():
    # scalar pair 1 apart, one large step: the gap closes without crossing
    g = path_graph(2)
    z = np.array([[[1.0]], [[0.0]]])
    out = _implicit_sign_consensus(z, z, np.array([10.0]), g, 1.0)
    assert out[0, 0, 0] >= out[1, 0, 0] - 1e-12
    assert out.sum() == pytest.approx(1.0)
