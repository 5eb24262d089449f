"""Day-ahead forecast for one target date: pre-process, stage 1, stage 2, post-process."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .armax import ArmaxModel, OrderSelection, fit_armax, forecast_armax, select_orders
from .config import RunConfig
from .errors import RangeError, ZeroVarianceError
from .ingest import IrradianceSeries, slice_window
from .metrics import r_squared
from .narnn import NarnnModel, predict_fitting_series, train_with_retry
from .preprocess import PreprocessArtifact, apply_postprocess, apply_preprocess, detrend

log = logging.getLogger(__name__)

CASE1 = "case1_two_stage_stationary"
CASE2 = "case2_two_stage_nonstationary"
CASE3 = "case3_single_stage"
CASES = (CASE1, CASE2, CASE3)


@dataclass(frozen=True, eq=False)
class StageOneResult:
    z: np.ndarray
    artifact: PreprocessArtifact
    model: NarnnModel
    retried: bool


@dataclass(frozen=True, eq=False)
class DayRun:
    case: str
    target_date: date
    forecast: IrradianceSeries
    normalized_forecast: np.ndarray
    fitting_series: np.ndarray
    fitting_r2: float | None
    training_r2: float
    selection: OrderSelection | None
    armax: ArmaxModel | None
    artifact: PreprocessArtifact


def to_normalized(ghi_day, artifact: PreprocessArtifact, d: date) -> np.ndarray:
    """Forward-transform one day of observed GHI with an existing artifact (daylight hours only)."""
    hours = np.asarray(artifact.mask_for(d).daylight_hours, dtype=int)
    offset = artifact.clear_sky_for(d)[hours] - np.asarray(ghi_day, float)[hours]
    if artifact.trend is not None:
        offset = detrend(offset, hours, artifact.trend)
    return (offset - artifact.norm.low) / (artifact.norm.high - artifact.norm.low)


def training_window(dataset: IrradianceSeries, target: date, days: int) -> IrradianceSeries:
    try:
        return slice_window(dataset, target - timedelta(days=days), days)
    except RangeError as exc:
        raise RangeError(f"not enough history before {target}: {exc}") from None


def stage_one(dataset: IrradianceSeries, target: date, config: RunConfig, detrend_on: bool) -> StageOneResult:
    window = training_window(dataset, target, config.training_days)
    z, artifact = apply_preprocess(window, config.preprocess_config(detrend=detrend_on))
    model, retried = train_with_retry(z, config.narnn_config())
    return StageOneResult(z, artifact, model, retried)


def _day_bounds(artifact: PreprocessArtifact, d: date) -> tuple[int, int]:
    s = artifact.day_slice(d)
    return s.start, s.stop


def armax_training_data(s1: StageOneResult, target: date, config: RunConfig):
    """Outputs and day-ahead NARNN rollouts for the ``train_days`` days before ``target``.

    Returns ``(y, u, n_last)`` where the final ``n_last`` samples belong to the previous day.
    """
    art, z, model = s1.artifact, s1.z, s1.model
    days = [target - timedelta(days=k) for k in range(config.armax.train_days, 0, -1)]
    ys, us = [], []
    for d in days:
        lo, hi = _day_bounds(art, d)
        ys.append(z[lo:hi])
        us.append(predict_fitting_series(model, z[:lo], hi - lo))
    return np.concatenate(ys), np.concatenate(us), ys[-1].size


def scan_orders(s1: StageOneResult, target: date, config: RunConfig) -> OrderSelection:
    """Equal-order scan with the previous day held out as test data."""
    y_all, u_all, n_test = armax_training_data(s1, target, config)
    return select_orders(y_all[:-n_test], u_all[:-n_test], y_all[-n_test:], u_all[-n_test:],
                         config.armax.max_order, config.armax.selection)


def armax_stage(s1: StageOneResult, target: date, config: RunConfig, u_future):
    """Fit ARMAX on the most recent days, using day-ahead NARNN rollouts as input."""
    y_all, u_all, n_test = armax_training_data(s1, target, config)
    selection = None
    if config.armax.fixed_orders is not None:
        orders = config.armax.fixed_orders
    else:
        selection = select_orders(y_all[:-n_test], u_all[:-n_test], y_all[-n_test:], u_all[-n_test:],
                                  config.armax.max_order, config.armax.selection)
        orders = selection.orders
    fitted = fit_armax(y_all, u_all, orders)
    fc = forecast_armax(fitted, u_future, y_all, u_init=u_all)
    return np.clip(fc, 0.0, 1.0), fitted, selection


def forecast_day(dataset: IrradianceSeries, target: date, config: RunConfig, case: str = CASE1,
                 stage1: StageOneResult | None = None) -> DayRun:
    """Produce the 24-hour GHI forecast for ``target`` under one of the three case set-ups."""
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}")
    s1 = stage1 or stage_one(dataset, target, config, detrend_on=case != CASE2)
    art = s1.artifact
    horizon = len(art.mask_for(target))
    fitting = predict_fitting_series(s1.model, s1.z, horizon)
    if case == CASE3:
        z_fc, fitted, selection = fitting, None, None
    else:
        z_fc, fitted, selection = armax_stage(s1, target, config, fitting)
    forecast = apply_postprocess(z_fc, art, target)

    fitting_r2 = None
    if dataset.start <= forecast.start and forecast.end <= dataset.end:
        actual = slice_window(dataset, target, 1).ghi
        if not np.isnan(actual).any():
            try:
                fitting_r2 = r_squared(to_normalized(actual, art, target), fitting)
            except ZeroVarianceError:
                fitting_r2 = None
    return DayRun(case, target, forecast, z_fc, fitting, fitting_r2, s1.model.training_r2,
                  selection, fitted, art)
