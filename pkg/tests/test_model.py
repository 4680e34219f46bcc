import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from datvo import AdaptiveTrackingOptimizer
from datvo.costs import example2_costs
from datvo.exceptions import ConfigurationError


def _model(**kw):
    args = dict(omega=1.0, h0=0.1, k=20.0, eps1=1e-3, eps2=1e-5, t_final=0.5, record_stride=10)
    args.update(kw)
    return AdaptiveTrackingOptimizer(**args)


def test_params_roundtrip_and_clone():
    m = _model(dt=5e-4)
    p = m.get_params()
    assert p["dt"] == 5e-4 and p["omega"] == 1.0
    c = clone(m)
    assert c.get_params() == p and not hasattr(c, "trajectory_")
    m.set_params(k=5.0)
    assert m.k == 5.0


def test_fit_predict():
    m = _model().fit(example2_costs())
    assert m.n_agents_ == 6 and m.dim_ == 2
    assert m.k_ == 20.0 and m.h0_ == 0.1
    p = m.predict([0.0, 0.25, 0.5])
    assert p.shape == (3, 6, 2)
    np.testing.assert_allclose(p[0], example2_costs().x0)
    np.testing.assert_allclose(p[-1], m.positions_[-1])
    assert m.score() == -m.metrics_["terminal_tracking_error"]


def test_fit_from_mapping_with_x0():
    x0 = np.zeros((6, 2))
    m = _model().fit({"name": "example2"}, x0=x0)
    np.testing.assert_allclose(m.positions_[0], x0)


def test_predict_out_of_range():
    m = _model().fit("example2")
    with pytest.raises(ValueError):
        m.predict(0.6)
    with pytest.raises(ValueError):
        m.predict([[0.1]])


def test_not_fitted():
    with pytest.raises(NotFittedError):
        _model().predict(0.0)


def test_bad_x0_shape():
    with pytest.raises(ConfigurationError):
        _model().fit("example2", x0=np.zeros((5, 2)))
