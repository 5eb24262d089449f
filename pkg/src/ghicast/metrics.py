"""Forecast accuracy metrics."""

from __future__ import annotations

import numpy as np

from .errors import LengthError, NormalizationError, ZeroVarianceError


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=float).reshape(-1)
    p = np.asarray(predicted, dtype=float).reshape(-1)
    if a.shape != p.shape or a.size == 0:
        raise LengthError(f"need equal nonzero lengths, got {a.size} and {p.size}")
    return a, p


def nrmse(actual, forecast) -> float:
    """Root mean square error divided by the mean of ``actual``."""
    a, f = _pair(actual, forecast)
    mean = float(np.mean(a))
    if mean == 0.0:
        raise NormalizationError("NRMSE undefined: actual series has zero mean")
    return float(np.sqrt(np.mean((a - f) ** 2))) / mean


def r_squared(actual, predicted) -> float:
    """Coefficient of determination; negative when worse than predicting the mean."""
    a, p = _pair(actual, predicted)
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise ZeroVarianceError("zero-variance target: R^2 undefined for constant actual values")
    return 1.0 - float(np.sum((a - p) ** 2)) / ss_tot
