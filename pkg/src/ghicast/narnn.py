"""Nonlinear autoregressive neural network (stage one).

A single tanh hidden layer maps the previous ``d`` samples to the next one.
Training minimises mean squared one-step error with Levenberg-Marquardt steps
on the exact Jacobian; when the damping saturates a backtracking gradient step
is tried instead.  The last 10 % of training windows are held out and the
parameters with the best held-out error are kept.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from os import PathLike

import numpy as np

from .errors import ConfigError, LengthError, RangeError, TrainingError
from .metrics import r_squared

log = logging.getLogger(__name__)

MODEL_SCHEMA = "ghicast.narnn/1"


@dataclass(frozen=True)
class NarnnConfig:
    d: int = 12
    hidden_units: int = 10
    max_epochs: int = 200
    target_loss: float = 1e-6
    seed: int = 0
    validation_fraction: float = 0.1
    patience: int = 6

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"lag count d must be >= 1, got {self.d}")
        if self.hidden_units < 1:
            raise ConfigError("hidden_units must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if not self.target_loss > 0:
            raise ConfigError("target_loss must be > 0")
        if not 0 <= self.validation_fraction < 0.5:
            raise ConfigError("validation_fraction must be in [0, 0.5)")

    def to_dict(self) -> dict:
        return {"d": self.d, "hidden_units": self.hidden_units, "max_epochs": self.max_epochs,
                "target_loss": self.target_loss, "seed": self.seed,
                "validation_fraction": self.validation_fraction, "patience": self.patience}


@dataclass(frozen=True, eq=False)
class NarnnModel:
    config: NarnnConfig
    input_weights: np.ndarray  # (hidden, d); column k multiplies lag k+1
    input_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: float
    training_r2: float = float("nan")
    loss_history: tuple[float, ...] = field(default=())

    def __post_init__(self):
        for name in ("input_weights", "input_bias", "output_weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.input_weights.shape != (self.config.hidden_units, self.config.d):
            raise ConfigError("input_weights shape does not match config")
        if not all(np.all(np.isfinite(p)) for p in self.params_list()):
            raise TrainingError("non-finite network parameters")

    def params_list(self):
        return [self.input_weights, self.input_bias, self.output_weights, np.array([self.output_bias])]

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params_list()])

    def predict(self, lags: np.ndarray) -> np.ndarray:
        """One-step predictions for rows of lags ordered ``[y(t-1), ..., y(t-d)]``."""
        return _forward(self.theta, np.atleast_2d(lags), self.config.hidden_units)[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, NarnnModel):
            return NotImplemented
        return (self.config == other.config and np.array_equal(self.theta, other.theta)
                and self.training_r2 == other.training_r2 and self.loss_history == other.loss_history)

    def to_dict(self) -> dict:
        return {"schema": MODEL_SCHEMA, "config": self.config.to_dict(),
                "input_weights": self.input_weights.tolist(), "input_bias": self.input_bias.tolist(),
                "output_weights": self.output_weights.tolist(), "output_bias": self.output_bias,
                "training_r2": self.training_r2, "loss_history": list(self.loss_history)}

    @classmethod
    def from_dict(cls, d: dict) -> "NarnnModel":
        if d.get("schema") != MODEL_SCHEMA:
            raise ConfigError(f"unsupported model schema {d.get('schema')!r}")
        return cls(NarnnConfig(**d["config"]), np.asarray(d["input_weights"]),
                   np.asarray(d["input_bias"]), np.asarray(d["output_weights"]),
                   float(d["output_bias"]), float(d["training_r2"]), tuple(d["loss_history"]))

    def save(self, path: str | PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | PathLike) -> "NarnnModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _unpack(theta: np.ndarray, d: int, hidden: int):
    i = hidden * d
    W1 = theta[:i].reshape(hidden, d)
    b1 = theta[i:i + hidden]
    w2 = theta[i + hidden:i + 2 * hidden]
    return W1, b1, w2, theta[-1]


def _forward(theta, X, hidden):
    W1, b1, w2, b2 = _unpack(theta, X.shape[1], hidden)
    A = np.tanh(X @ W1.T + b1)
    return A @ w2 + b2, A


def jacobian(theta: np.ndarray, X: np.ndarray, hidden: int) -> tuple[np.ndarray, np.ndarray]:
    """Network outputs and their Jacobian w.r.t. the flat parameter vector."""
    W1, b1, w2, b2 = _unpack(theta, X.shape[1], hidden)
    yhat, A = _forward(theta, X, hidden)
    G = (1.0 - A**2) * w2  # d yhat / d pre-activation, (N, hidden)
    n = X.shape[0]
    J = np.empty((n, theta.size))
    J[:, : hidden * X.shape[1]] = (G[:, :, None] * X[:, None, :]).reshape(n, -1)
    J[:, hidden * X.shape[1]: hidden * X.shape[1] + hidden] = G
    J[:, hidden * X.shape[1] + hidden: -1] = A
    J[:, -1] = 1.0
    return yhat, J


def loss_and_gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray, hidden: int):
    """Mean squared error and its exact gradient."""
    yhat, J = jacobian(theta, X, hidden)
    r = yhat - y
    return float(np.mean(r**2)), 2.0 / y.size * (J.T @ r)


def lag_matrix(series, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Supervised pairs: row t holds ``[y(t-1), ..., y(t-d)]`` and target ``y(t)``."""
    y = np.asarray(series, dtype=float)
    n = y.size - d
    if n <= 0:
        raise LengthError(f"need more than d={d} samples, got {y.size}")
    X = np.column_stack([y[d - k: d - k + n] for k in range(1, d + 1)])
    return X, y[d:]


def init_theta(config: NarnnConfig) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    size = config.hidden_units * (config.d + 2) + 1
    return rng.uniform(-0.5, 0.5, size)


def train_narnn(history, config: NarnnConfig | None = None) -> NarnnModel:
    """Fit the network to one-step-ahead prediction of ``history``."""
    config = config or NarnnConfig()
    y = np.asarray(history, dtype=float).reshape(-1)
    d, hidden = config.d, config.hidden_units
    if y.size <= d + 10:
        raise LengthError(f"history of {y.size} samples too short for d={d} (need > {d + 10})")
    if not np.all(np.isfinite(y)):
        raise TrainingError("history contains non-finite values")
    if y.min() < 0 or y.max() > 1:
        raise RangeError("history must be normalised into [0, 1]")
    X, t = lag_matrix(y, d)
    if np.ptp(t) == 0:
        raise TrainingError("zero-variance target: constant history cannot be fitted")

    n_val = int(math.floor(config.validation_fraction * t.size))
    Xtr, ttr = X[: t.size - n_val], t[: t.size - n_val]
    Xva, tva = X[t.size - n_val:], t[t.size - n_val:]

    def val_loss(th):
        return float(np.mean((_forward(th, Xva, hidden)[0] - tva) ** 2)) if n_val else 0.0

    theta = init_theta(config)
    yhat, J = jacobian(theta, Xtr, hidden)
    r = yhat - ttr
    loss = float(np.mean(r**2))
    history_ = [loss]
    best_theta, best_val, fails = theta, val_loss(theta), 0
    mu, mu_max = 1e-3, 1e10
    eye = np.eye(theta.size)

    for epoch in range(1, config.max_epochs + 1):
        if loss <= config.target_loss:
            break
        g = J.T @ r
        H = J.T @ J
        accepted = False
        while mu <= mu_max:
            try:
                step = np.linalg.solve(H + mu * eye, g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            cand = theta - step
            c_yhat, c_J = jacobian(cand, Xtr, hidden)
            c_r = c_yhat - ttr
            c_loss = float(np.mean(c_r**2))
            if not math.isfinite(c_loss):
                raise TrainingError(f"loss became non-finite at epoch {epoch}")
            if c_loss < loss:
                accepted = True
                mu = max(mu / 10.0, 1e-12)
                break
            mu *= 10.0
        if not accepted:
            # first-order fallback: backtracking along the negative gradient
            grad = 2.0 / ttr.size * g
            lr = 1.0
            for _ in range(30):
                cand = theta - lr * grad
                c_yhat, c_J = jacobian(cand, Xtr, hidden)
                c_r = c_yhat - ttr
                c_loss = float(np.mean(c_r**2))
                if math.isfinite(c_loss) and c_loss < loss:
                    accepted = True
                    mu = 1e-3
                    break
                lr *= 0.5
        if not accepted:
            log.debug("no descent step at epoch %d; stopping", epoch)
            break
        theta, J, r, loss = cand, c_J, c_r, c_loss
        history_.append(loss)
        if n_val:
            v = val_loss(theta)
            if v < best_val:
                best_theta, best_val, fails = theta, v, 0
            else:
                fails += 1
                if fails >= config.patience:
                    break
        else:
            best_theta = theta

    pred_all = _forward(best_theta, X, hidden)[0]
    r2 = r_squared(t, pred_all)
    W1, b1, w2, b2 = _unpack(best_theta, d, hidden)
    return NarnnModel(config, W1, b1, w2, float(b2), r2, tuple(history_))


def predict_fitting_series(model: NarnnModel, recent_history, horizon: int) -> np.ndarray:
    """Closed-loop rollout of ``horizon`` steps, each output clamped to [0, 1] and fed back."""
    if horizon < 0:
        raise RangeError(f"horizon must be >= 0, got {horizon}")
    h = np.asarray(recent_history, dtype=float).reshape(-1)
    d = model.config.d
    if h.size < d:
        raise LengthError(f"need at least d={d} history samples, got {h.size}")
    window = list(h[-d:][::-1])  # most recent first
    theta, hidden = model.theta, model.config.hidden_units
    out = np.empty(horizon)
    for k in range(horizon):
        v = float(_forward(theta, np.array([window]), hidden)[0][0])
        v = min(max(v, 0.0), 1.0)
        out[k] = v
        window = [v] + window[:-1]
    return out


def predict_one_step(model: NarnnModel, series) -> np.ndarray:
    """Open-loop predictions for every sample of ``series`` after the first ``d``."""
    X, _ = lag_matrix(series, model.config.d)
    return np.clip(model.predict(X), 0.0, 1.0)


def train_with_retry(history, config: NarnnConfig) -> tuple[NarnnModel, bool]:
    """Train; if the fit explains nothing (R^2 <= 0) retrain once with a fresh seed."""
    model = train_narnn(history, config)
    if model.training_r2 > 0:
        return model, False
    log.warning("NARNN training R^2 = %.3f; retrying once with seed %d",
                model.training_r2, config.seed + 1)
    return train_narnn(history, replace(config, seed=config.seed + 1)), True


def sweep_lags(history, lags, config: NarnnConfig | None = None) -> list[tuple[int, float, float]]:
    """Train one network per lag count; returns ``(d, training R^2, closing loss)`` rows."""
    config = config or NarnnConfig()
    rows = []
    for d in lags:
        m = train_narnn(history, replace(config, d=int(d)))
        rows.append((int(d), m.training_r2, m.loss_history[-1]))
    return rows
