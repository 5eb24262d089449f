"""Day-ahead hourly GHI forecasting with a stationarised two-stage NARNN + ARMAX model."""

from .armax import ArmaxModel, ArmaxOrders, fit_armax, forecast_armax, select_orders
from .config import RunConfig, load_config
from .errors import ConfigError, DataError, GhicastError, NumericalError
from .evaluate import compare_cases, persistence_forecast, run_case
from .ingest import DENVER, IrradianceSeries, SiteMeta, parse_hourly_csv, read_hourly_csv
from .metrics import nrmse, r_squared
from .narnn import NarnnConfig, NarnnModel, predict_fitting_series, train_narnn
from .pipeline import CASE1, CASE2, CASE3, forecast_day
from .preprocess import apply_postprocess, apply_preprocess

__version__ = "0.1.0"

__all__ = [
    "ArmaxModel", "ArmaxOrders", "fit_armax", "forecast_armax", "select_orders",
    "RunConfig", "load_config", "ConfigError", "DataError", "GhicastError", "NumericalError",
    "compare_cases", "persistence_forecast", "run_case", "DENVER", "IrradianceSeries",
    "SiteMeta", "parse_hourly_csv", "read_hourly_csv", "nrmse", "r_squared", "NarnnConfig",
    "NarnnModel", "predict_fitting_series", "train_narnn", "CASE1", "CASE2", "CASE3",
    "forecast_day", "apply_postprocess", "apply_preprocess",
]
