"""Augmented Dickey-Fuller unit-root test, constant-only regression.

Regression::

    dy_t = alpha + gamma * y_{t-1} + sum_{i=1..p} beta_i * dy_{t-i} + e_t

The lag ``p`` is chosen by AIC over a common estimation sample, then the
chosen model is re-estimated on every observation it can use.  Critical values
come from MacKinnon's (2010) finite-sample response surfaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, LengthError, ZeroVarianceError

# MacKinnon (2010), constant, one variable: tau_c(T) = b0 + b1/T + b2/T^2 + b3/T^3
_MACKINNON_C = {
    "1%": (-3.43035, -6.5393, -16.786, -79.433),
    "5%": (-2.86154, -2.8903, -4.234, -40.040),
    "10%": (-2.56677, -1.5384, -2.809, 0.0),
}
LEVELS = {0.01: "1%", 0.05: "5%", 0.10: "10%"}


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lag_order: int
    nobs: int
    critical_values: dict[str, float]
    significance: str
    is_stationary: bool

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "lag_order": self.lag_order, "nobs": self.nobs,
                "critical_values": dict(self.critical_values),
                "significance": self.significance, "is_stationary": self.is_stationary}

    @classmethod
    def from_dict(cls, d: dict) -> "AdfResult":
        return cls(float(d["statistic"]), int(d["lag_order"]), int(d["nobs"]),
                   {k: float(v) for k, v in d["critical_values"].items()},
                   str(d["significance"]), bool(d["is_stationary"]))


def critical_values(nobs: int) -> dict[str, float]:
    t = float(nobs)
    return {k: b0 + b1 / t + b2 / t**2 + b3 / t**3 for k, (b0, b1, b2, b3) in _MACKINNON_C.items()}


def default_max_lag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _level_key(significance) -> str:
    if isinstance(significance, str):
        key = significance.strip()
        if key in _MACKINNON_C:
            return key
    else:
        for v, key in LEVELS.items():
            if abs(float(significance) - v) < 1e-12:
                return key
    raise ConfigError(f"significance must be one of 1%, 5%, 10%; got {significance!r}")


def _design(y: np.ndarray, p: int, first: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows t = first .. n-1 of the ADF regression with ``p`` lagged differences."""
    dy = np.diff(y)  # dy[t-1] = y[t] - y[t-1]
    t = np.arange(first, y.size)
    cols = [np.ones(t.size), y[t - 1]]
    cols += [dy[t - 1 - i] for i in range(1, p + 1)]
    return np.column_stack(cols), dy[t - 1]


def _ols(X: np.ndarray, z: np.ndarray):
    beta, *_ = np.linalg.lstsq(X, z, rcond=None)
    resid = z - X @ beta
    return beta, float(resid @ resid)


def adf_test(series, max_lag: int | None = None, significance="5%", autolag: str | None = "aic") -> AdfResult:
    """Test ``series`` for a unit root.

    Parameters
    ----------
    series : array_like
        Observations, oldest first.
    max_lag : int, optional
        Largest number of lagged differences; defaults to
        ``floor(12 * (n / 100) ** 0.25)``.
    significance : {"1%", "5%", "10%"} or float
        Level at which ``is_stationary`` is decided.
    autolag : {"aic", None}
        ``None`` uses exactly ``max_lag`` lagged differences.
    """
    y = np.asarray(series, dtype=float).reshape(-1)
    n = y.size
    level = _level_key(significance)
    if max_lag is None:
        max_lag = default_max_lag(n)
    if max_lag < 0:
        raise ConfigError("max_lag must be >= 0")
    if n < max_lag + 10:
        raise LengthError(f"ADF needs at least max_lag + 10 = {max_lag + 10} observations, got {n}")
    if np.ptp(y) == 0:
        raise ZeroVarianceError("ADF test on a constant series")

    if autolag is None:
        p = max_lag
    elif autolag.lower() == "aic":
        best = None
        for lag in range(max_lag + 1):
            X, z = _design(y, lag, max_lag + 1)
            _, ssr = _ols(X, z)
            nobs = z.size
            aic = nobs * math.log(ssr / nobs) + 2 * X.shape[1]
            if best is None or aic < best[0]:
                best = (aic, lag)
        p = best[1]
    else:
        raise ConfigError(f"unknown autolag {autolag!r}")

    X, z = _design(y, p, p + 1)
    nobs, k = X.shape
    beta, ssr = _ols(X, z)
    sigma2 = ssr / (nobs - k)
    if sigma2 <= 0:
        raise ZeroVarianceError("ADF regression has a perfect fit; statistic undefined")
    cov = sigma2 * np.linalg.inv(X.T @ X)
    stat = float(beta[1] / math.sqrt(cov[1, 1]))
    crit = critical_values(nobs)
    return AdfResult(stat, p, nobs, crit, level, stat < crit[level])
