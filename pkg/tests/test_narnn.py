from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import ghicast.narnn as narnn
from ghicast.errors import ConfigError, LengthError, RangeError, TrainingError
from ghicast.metrics import nrmse
from ghicast.narnn import (
    NarnnConfig,
    NarnnModel,
    init_theta,
    jacobian,
    lag_matrix,
    loss_and_gradient,
    predict_fitting_series,
    predict_one_step,
    sweep_lags,
    train_narnn,
    train_with_retry,
)


def sinusoid(n):
    t = np.arange(n)
    return (np.sin(2 * np.pi * t / 24) + 1) / 2


@pytest.fixture(scope="module")
def sine_model():
    y = sinusoid(24 * 20)
    return train_narnn(y[:-24], NarnnConfig(d=2, hidden_units=8)), y


def constant_model(bias, d=3, hidden=2):
    cfg = NarnnConfig(d=d, hidden_units=hidden)
    return NarnnModel(cfg, np.zeros((hidden, d)), np.zeros(hidden), np.zeros(hidden), bias)


@pytest.mark.parametrize("kw", [dict(d=0), dict(hidden_units=0), dict(max_epochs=0),
                                dict(target_loss=0.0), dict(validation_fraction=0.6)])
def test_config_invariants(kw):
    with pytest.raises(ConfigError):
        NarnnConfig(**kw)


def test_lag_matrix_order():
    X, t = lag_matrix([1, 2, 3, 4, 5], 2)
    np.testing.assert_array_equal(X, [[2, 1], [3, 2], [4, 3]])
    np.testing.assert_array_equal(t, [3, 4, 5])
    with pytest.raises(LengthError):
        lag_matrix([1, 2], 2)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    d, hidden, n = 2, 3, 10
    X = rng.uniform(0, 1, (n, d))
    y = rng.uniform(0, 1, n)
    theta = init_theta(NarnnConfig(d=d, hidden_units=hidden, seed=5))
    _, g = loss_and_gradient(theta, X, y, hidden)
    eps = 1e-6
    fd = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = eps
        fd[i] = (loss_and_gradient(theta + e, X, y, hidden)[0]
                 - loss_and_gradient(theta - e, X, y, hidden)[0]) / (2 * eps)
    rel = np.abs(g - fd) / np.maximum(np.abs(fd), 1e-8)
    assert rel.max() < 1e-5


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(3)
    X = rng.uniform(0, 1, (7, 4))
    theta = init_theta(NarnnConfig(d=4, hidden_units=5, seed=1))
    yhat, J = jacobian(theta, X, 5)
    eps = 1e-6
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = eps
        col = (jacobian(theta + e, X, 5)[0] - jacobian(theta - e, X, 5)[0]) / (2 * eps)
        np.testing.assert_allclose(J[:, i], col, atol=1e-8)


def test_init_is_seeded_uniform():
    a = init_theta(NarnnConfig(d=3, hidden_units=4, seed=9))
    assert a.size == 4 * 5 + 1
    assert np.all(np.abs(a) <= 0.5)
    np.testing.assert_array_equal(a, init_theta(NarnnConfig(d=3, hidden_units=4, seed=9)))


def test_sinusoid_fit_and_rollout(sine_model):
    model, y = sine_model
    assert model.training_r2 >= 0.99
    fc = predict_fitting_series(model, y[:-24], 24)
    assert nrmse(y[-24:], fc) <= 0.1


def test_loss_history_non_increasing(sine_model):
    h = np.array(sine_model[0].loss_history)
    assert np.all(np.diff(h) <= 0)


def test_training_is_bit_reproducible():
    y = sinusoid(200) * 0.8 + 0.1 * np.random.default_rng(0).uniform(size=200)
    cfg = NarnnConfig(d=4, hidden_units=5, max_epochs=30, seed=3)
    a, b = train_narnn(y, cfg), train_narnn(y, cfg)
    assert a == b
    np.testing.assert_array_equal(a.theta, b.theta)
    assert a != train_narnn(y, replace(cfg, seed=4))


def test_training_errors():
    with pytest.raises(TrainingError, match="zero-variance target"):
        train_narnn(np.full(100, 0.4), NarnnConfig(d=3))
    with pytest.raises(LengthError):
        train_narnn(np.linspace(0, 1, 15), NarnnConfig(d=5))
    with pytest.raises(RangeError):
        train_narnn(np.linspace(0, 2, 100), NarnnConfig(d=3))
    with pytest.raises(TrainingError):
        train_narnn(np.r_[np.linspace(0, 1, 50), np.nan], NarnnConfig(d=3))


def test_rollout_examples():
    m = constant_model(0.3)
    np.testing.assert_array_equal(predict_fitting_series(m, np.ones(5), 7), np.full(7, 0.3))
    assert predict_fitting_series(m, np.ones(5), 0).size == 0
    with pytest.raises(RangeError):
        predict_fitting_series(m, np.ones(5), -1)
    with pytest.raises(LengthError):
        predict_fitting_series(m, np.ones(2), 3)


def test_rollout_feeds_back_predictions():
    # y(t) = y(t-1) + 0.1 through a near-linear tanh unit, clamped at 1
    cfg = NarnnConfig(d=1, hidden_units=1)
    m = NarnnModel(cfg, np.array([[1e-3]]), np.array([0.0]), np.array([1e3]), 0.1)
    out = predict_fitting_series(m, [0.2], 10)
    np.testing.assert_allclose(out[:7], 0.3 + 0.1 * np.arange(7), atol=1e-5)
    assert out[-1] == 1.0


@given(arrays(float, 3 * 2 + 2 + 2 + 1, elements=st.floats(-50, 50)),
       arrays(float, 6, elements=st.floats(0, 1)), st.integers(0, 30))
def test_rollout_stays_in_unit_interval(theta, hist, horizon):
    cfg = NarnnConfig(d=3, hidden_units=2)
    W1, b1, w2, b2 = narnn._unpack(theta, 3, 2)
    out = predict_fitting_series(NarnnModel(cfg, W1, b1, w2, float(b2)), hist, horizon)
    assert out.size == horizon
    assert np.all((out >= 0) & (out <= 1))


def test_one_step_predictions_clamped(sine_model):
    model, y = sine_model
    p = predict_one_step(model, y[:50])
    assert p.size == 48 and np.all((p >= 0) & (p <= 1))


def test_model_round_trip(tmp_path, sine_model):
    model = sine_model[0]
    p = tmp_path / "m.json"
    model.save(p)
    assert NarnnModel.load(p) == model
    with pytest.raises(ConfigError):
        NarnnModel.from_dict({**model.to_dict(), "schema": "other/9"})


def test_model_rejects_non_finite():
    with pytest.raises(TrainingError):
        NarnnModel(NarnnConfig(d=1, hidden_units=1), [[np.nan]], [0.0], [1.0], 0.0)


def test_retry_once_on_useless_fit(monkeypatch):
    calls = []
    real = narnn.train_narnn

    def fake(history, config):
        calls.append(config.seed)
        m = real(history, config)
        return replace(m, training_r2=-0.5) if len(calls) == 1 else m

    monkeypatch.setattr(narnn, "train_narnn", fake)
    y = sinusoid(120)
    model, retried = train_with_retry(y, NarnnConfig(d=2, hidden_units=3, max_epochs=5, seed=10))
    assert retried and calls == [10, 11]
    assert model.config.seed == 11


def test_sweep_lags():
    rows = sweep_lags(sinusoid(150), [1, 3], NarnnConfig(hidden_units=3, max_epochs=10))
    assert [r[0] for r in rows] == [1, 3]
    assert all(np.isfinite(r[1]) for r in rows)
