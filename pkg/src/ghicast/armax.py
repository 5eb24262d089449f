"""ARMAX identification, forecasting and order selection (stage two).

Model, with ``q`` the backshift operator::

    A(q) y(k) = B(q) u(k) + C(q) v(k)
    A(q) = 1 + a1 q^-1 + ... + an q^-n
    B(q) = b1 + b2 q^-1 + ... + bm q^-(m-1)
    C(q) = 1 + c1 q^-1 + ... + cr q^-r

Estimation is a two-stage pseudo-linear regression (Hannan-Rissanen): a long
ARX fit supplies innovation estimates, then ``y`` is regressed on lags of
``y``, ``u`` and those innovations.  One damped refinement pass re-filters the
innovations through the fitted model and re-solves.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter, lfiltic

from .errors import (
    ConditioningError,
    ConfigError,
    DegenerateError,
    GhicastError,
    LengthError,
    SelectionError,
    ShapeError,
)
from .metrics import nrmse

log = logging.getLogger(__name__)

_RCOND = 1e-10


@dataclass(frozen=True)
class ArmaxOrders:
    n: int
    m: int
    r: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.r < 0:
            raise ConfigError(f"ARMAX orders need n >= 1, m >= 1, r >= 0; got {self}")

    @property
    def n_params(self) -> int:
        return self.n + self.m + self.r

    @property
    def max_lag(self) -> int:
        return max(self.n, self.m - 1, self.r)


@dataclass(frozen=True, eq=False)
class ArmaxModel:
    orders: ArmaxOrders
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    noise_variance: float
    innovations_tail: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_obs: int = 0

    def __post_init__(self):
        for name in ("a", "b", "c", "innovations_tail"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        o = self.orders
        if (self.a.size, self.b.size, self.c.size) != (o.n, o.m, o.r):
            raise ShapeError(f"coefficient lengths {(self.a.size, self.b.size, self.c.size)} "
                             f"do not match orders {o}")
        if not all(np.all(np.isfinite(v)) for v in (self.a, self.b, self.c)):
            raise ConditioningError("non-finite ARMAX coefficients")

    @property
    def A(self) -> np.ndarray:
        """Monic polynomial coefficients ``[1, a1, ..., an]``."""
        return np.concatenate([[1.0], self.a])

    @property
    def C(self) -> np.ndarray:
        return np.concatenate([[1.0], self.c])

    def to_dict(self) -> dict:
        o = self.orders
        return {"orders": {"n": o.n, "m": o.m, "r": o.r}, "a": self.a.tolist(),
                "b": self.b.tolist(), "c": self.c.tolist(),
                "noise_variance": self.noise_variance,
                "innovations_tail": self.innovations_tail.tolist(), "n_obs": self.n_obs}

    @classmethod
    def from_dict(cls, d: dict) -> "ArmaxModel":
        return cls(ArmaxOrders(**d["orders"]), d["a"], d["b"], d["c"],
                   float(d["noise_variance"]), d.get("innovations_tail", []), int(d.get("n_obs", 0)))


def _lags(x: np.ndarray, rows: np.ndarray, lags) -> list[np.ndarray]:
    return [x[rows - k] for k in lags]


def _solve(X: np.ndarray, z: np.ndarray, what: str) -> np.ndarray:
    if X.shape[0] < X.shape[1]:
        raise LengthError(f"{what}: {X.shape[0]} rows for {X.shape[1]} unknowns")
    s = np.linalg.svd(X, compute_uv=False)
    if s[-1] <= _RCOND * s[0]:
        raise ConditioningError(
            f"{what}: singular regression matrix (singular values {s[0]:.3g} .. {s[-1]:.3g}); "
            "try lower ARMAX orders")
    return np.linalg.lstsq(X, z, rcond=None)[0]


def filter_innovations(y, u, a, b, c) -> np.ndarray:
    """One-step prediction errors ``C^-1 (A y - B u)`` with zero pre-sample values."""
    A = np.concatenate([[1.0], a])
    C = np.concatenate([[1.0], c])
    with np.errstate(over="ignore", invalid="ignore"):
        v = lfilter(A, C, np.asarray(y, float)) - lfilter(np.asarray(b, float), C, np.asarray(u, float))
    bad = ~np.isfinite(v) | (np.abs(v) > 1e150)
    if bad.any():
        v[np.argmax(bad):] = np.inf
    return v


def _stage2(y, u, v, orders: ArmaxOrders, k0: int):
    rows = np.arange(k0, y.size)
    cols = [-c for c in _lags(y, rows, range(1, orders.n + 1))]
    cols += _lags(u, rows, range(0, orders.m))
    cols += _lags(v, rows, range(1, orders.r + 1))
    X = np.column_stack(cols)
    theta = _solve(X, y[rows], "ARMAX regression")
    resid = y[rows] - X @ theta
    return theta, float(np.mean(resid**2))


def _split(theta, orders: ArmaxOrders):
    n, m = orders.n, orders.m
    return theta[:n], theta[n:n + m], theta[n + m:]


def min_length(orders: ArmaxOrders) -> int:
    return 3 * orders.n_params + 10


def fit_armax(y, u, orders: ArmaxOrders) -> ArmaxModel:
    """Estimate ``a``, ``b``, ``c`` from aligned output ``y`` and input ``u``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if y.shape != u.shape:
        raise ShapeError(f"y and u differ in length ({y.size} vs {u.size})")
    if y.size < min_length(orders):
        raise LengthError(f"ARMAX{(orders.n, orders.m, orders.r)} needs at least "
                          f"{min_length(orders)} samples, got {y.size}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(u))):
        raise ShapeError("non-finite values in ARMAX data")

    if orders.r == 0:
        theta, var = _stage2(y, u, np.zeros_like(y), orders, orders.max_lag)
        a, b, c = _split(theta, orders)
        return ArmaxModel(orders, a, b, c, var, np.zeros(0), y.size - orders.max_lag)

    # stage 1: long ARX for innovation estimates
    long_order = 2 * max(orders.n, orders.m, orders.r) + 4
    long_order = max(1, min(long_order, (y.size - 10) // 3))
    rows = np.arange(long_order, y.size)
    X1 = np.column_stack([-c for c in _lags(y, rows, range(1, long_order + 1))]
                         + _lags(u, rows, range(0, long_order)))
    th1 = _solve(X1, y[rows], "long ARX pre-fit")
    v_hat = np.zeros_like(y)
    v_hat[rows] = y[rows] - X1 @ th1

    # stage 2: pseudo-linear regression on the estimated innovations
    k0 = max(orders.max_lag, long_order + orders.r)
    theta, stage2_var = _stage2(y, u, v_hat, orders, k0)

    # refinement: re-filter innovations, re-solve, accept a damped step only if it helps
    k_eval = orders.max_lag

    def filtered_var(th):
        a, b, c = _split(th, orders)
        v = filter_innovations(y, u, a, b, c)
        tail = v[k_eval:]
        return (float(np.mean(tail**2)) if np.all(np.isfinite(tail)) else math.inf), v

    var, v = filtered_var(theta)
    if math.isfinite(var):
        try:
            target, _ = _stage2(y, u, v, orders, k_eval)
        except ConditioningError:
            target = None
        if target is not None:
            for lam in (1.0, 0.5, 0.25):
                cand = theta + lam * (target - theta)
                c_var, c_v = filtered_var(cand)
                if c_var < var:
                    theta, var, v = cand, c_var, c_v
                    break
    if not math.isfinite(var):
        # non-invertible C(q): innovations cannot be re-filtered, keep the regression estimate
        log.debug("ARMAX%s: C(q) not invertible, skipping refinement", (orders.n, orders.m, orders.r))
        var, v = stage2_var, v_hat
    a, b, c = _split(theta, orders)
    return ArmaxModel(orders, a, b, c, var, v[-orders.r:], y.size - k_eval)


def forecast_armax(model: ArmaxModel, u_future, y_init, v_init=None, u_init=None) -> np.ndarray:
    """Multi-step forecast with future innovations at their mean of zero.

    ``y_init``, ``v_init`` and ``u_init`` hold past outputs, innovations and
    inputs, oldest first; only their last ``n``, ``r`` and ``m - 1`` entries
    are used.  ``v_init`` defaults to the model's last fitted innovations and
    ``u_init`` to zeros.
    """
    o = model.orders
    u_f = np.asarray(u_future, dtype=float).reshape(-1)
    y0 = np.asarray(y_init, dtype=float).reshape(-1)
    H = u_f.size
    if y0.size < o.n:
        raise ShapeError(f"y_init needs {o.n} values, got {y0.size}")
    if v_init is None:
        v_init = model.innovations_tail if model.innovations_tail.size == o.r else np.zeros(o.r)
    v0 = np.asarray(v_init, dtype=float).reshape(-1)
    if v0.size < o.r:
        raise ShapeError(f"v_init needs {o.r} values, got {v0.size}")
    u0 = np.zeros(o.m - 1) if u_init is None else np.asarray(u_init, dtype=float).reshape(-1)
    if u0.size < o.m - 1:
        raise ShapeError(f"u_init needs {o.m - 1} values, got {u0.size}")
    if H == 0:
        return np.zeros(0)

    # w(k): input and known past-innovation terms on the right-hand side
    u = np.concatenate([u0[u0.size - (o.m - 1):] if o.m > 1 else np.zeros(0), u_f])
    w = np.convolve(u, model.b)[o.m - 1:o.m - 1 + H]
    v_past = v0[v0.size - o.r:] if o.r else np.zeros(0)
    for l in range(1, o.r + 1):
        # v(k - l) is a known past innovation while k - l < 0
        for k in range(min(l, H)):
            w[k] += model.c[l - 1] * v_past[o.r + k - l]
    y_past = y0[y0.size - o.n:][::-1]
    zi = lfiltic([1.0], model.A, y_past)
    with np.errstate(over="ignore", invalid="ignore"):
        return lfilter([1.0], model.A, w, zi=zi)[0]


def simulate_armax(a, b, c, u, v) -> np.ndarray:
    """Output of the ARMAX system driven by input ``u`` and innovations ``v`` from rest."""
    A = np.concatenate([[1.0], np.asarray(a, float).reshape(-1)])
    C = np.concatenate([[1.0], np.asarray(c, float).reshape(-1)])
    return (lfilter(np.asarray(b, float).reshape(-1), A, np.asarray(u, float))
            + lfilter(C, A, np.asarray(v, float)))


def aic(model: ArmaxModel, sample_count: int) -> float:
    """Akaike information criterion ``N ln(sigma^2) + 2 (n + m + r)``."""
    k = model.orders.n_params
    if not model.noise_variance > 0:
        raise DegenerateError("AIC undefined for zero noise variance")
    if sample_count <= k:
        raise DegenerateError(f"AIC needs more samples ({sample_count}) than parameters ({k})")
    return sample_count * math.log(model.noise_variance) + 2 * k


@dataclass(frozen=True)
class OrderSelection:
    orders: ArmaxOrders
    criterion: str
    scan: tuple[tuple[int, float], ...]  # (k, score); failed candidates are absent
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def best_score(self) -> float:
        return dict(self.scan)[self.orders.n]


def _score_candidate(k, y_train, u_train, y_test, u_test, criterion):
    orders = ArmaxOrders(k, k, k)
    model = fit_armax(y_train, u_train, orders)
    if criterion == "aic":
        return aic(model, model.n_obs)
    fc = forecast_armax(model, u_test, y_train, u_init=u_train)
    if not np.all(np.isfinite(fc)):
        raise ConditioningError("forecast diverged")
    return nrmse(y_test, fc)


def select_orders(y_train, u_train, y_test, u_test, max_order: int = 6,
                  criterion: str = "error_scan", workers: int = 1) -> OrderSelection:
    """Scan equal orders ``(k, k, k)`` for ``k = 1..max_order``.

    ``error_scan`` fits each candidate on the training part and scores the
    NRMSE of its forecast over the test part; ``aic`` scores the training fit.
    The lowest score wins, ties going to the smaller ``k``.
    """
    if max_order < 1:
        raise ConfigError("max_order must be >= 1")
    if criterion not in ("error_scan", "aic"):
        raise ConfigError(f"unknown order-selection criterion {criterion!r}")
    if criterion == "error_scan" and np.asarray(y_test).size == 0:
        raise LengthError("order scan needs a nonempty test series")

    def run(k):
        try:
            return k, _score_candidate(k, y_train, u_train, y_test, u_test, criterion), None
        except GhicastError as exc:
            return k, None, str(exc)

    ks = range(1, max_order + 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, ks))
    else:
        results = [run(k) for k in ks]

    scan = tuple((k, s) for k, s, _ in results if s is not None and math.isfinite(s))
    failures = {k: err for k, _, err in results if err is not None}
    if not scan:
        detail = "; ".join(f"k={k}: {e}" for k, e in failures.items())
        raise SelectionError(f"no ARMAX order could be fitted ({detail})")
    best_k, best = scan[0]
    for k, s in scan[1:]:
        if s < best:
            best_k, best = k, s
    for k, e in failures.items():
        log.debug("order %d rejected: %s", k, e)
    return OrderSelection(ArmaxOrders(best_k, best_k, best_k), criterion, scan, failures)
