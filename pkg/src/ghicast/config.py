"""Run configuration, loaded from a versioned JSON file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from os import PathLike

import numpy as np

from .armax import ArmaxOrders
from .errors import ConfigError
from .ingest import DENVER, SiteMeta
from .narnn import NarnnConfig
from .preprocess import PreprocessConfig

CONFIG_SCHEMA = "ghicast.config/1"

# stream identifiers for per-component seed derivation
STREAM_NARNN = 1
STREAM_ARMAX_SIM = 2
STREAM_SYNTHETIC = 3


@dataclass(frozen=True)
class ArmaxConfig:
    max_order: int = 6
    fixed_orders: ArmaxOrders | None = None
    selection: str = "error_scan"
    train_days: int = 6

    def __post_init__(self):
        if self.max_order < 1:
            raise ConfigError("armax.max_order must be >= 1")
        if self.selection not in ("error_scan", "aic"):
            raise ConfigError(f"armax.selection must be error_scan or aic, got {self.selection!r}")
        if self.train_days < 2:
            raise ConfigError("armax.train_days must be >= 2 (scan needs a held-out day)")


@dataclass(frozen=True)
class AdfConfig:
    max_lag: int | None = None
    significance: str = "5%"
    strict: bool = False


@dataclass(frozen=True)
class CsvOptions:
    timestamp_col: str = "timestamp"
    ghi_col: str = "ghi"
    time_col: str | None = None
    delimiter: str = ","
    sentinel: float = -9999.0
    skip_rows: int = 0
    hour_ending: bool = False


@dataclass(frozen=True)
class RunConfig:
    site: SiteMeta = DENVER
    data_path: str | None = None
    training_days: int = 30
    narnn: NarnnConfig = field(default_factory=NarnnConfig)
    armax: ArmaxConfig = field(default_factory=ArmaxConfig)
    detrend_degree: int = 4
    adf: AdfConfig = field(default_factory=AdfConfig)
    seed: int = 0
    output_dir: str = "out"
    fill_policy: str = "linear"
    csv: CsvOptions = field(default_factory=CsvOptions)

    def __post_init__(self):
        if self.training_days < 2:
            raise ConfigError("training_days must be >= 2")
        if self.armax.train_days > self.training_days:
            raise ConfigError("armax.train_days cannot exceed training_days")

    def preprocess_config(self, detrend: bool = True) -> PreprocessConfig:
        return PreprocessConfig(detrend=detrend, degree=self.detrend_degree,
                                adf_max_lag=self.adf.max_lag,
                                significance=self.adf.significance, strict=self.adf.strict)

    def component_seed(self, stream: int) -> int:
        return int(np.random.SeedSequence([self.seed, stream]).generate_state(1)[0])

    def narnn_config(self) -> NarnnConfig:
        return replace(self.narnn, seed=self.component_seed(STREAM_NARNN))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["site"] = self.site.to_dict()
        fo = self.armax.fixed_orders
        d["armax"]["fixed_orders"] = None if fo is None else [fo.n, fo.m, fo.r]
        d["schema"] = CONFIG_SCHEMA
        return d


def _sub(cls, raw: dict | None, what: str):
    raw = dict(raw or {})
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown {what} key(s): {sorted(unknown)}")
    return raw


def config_from_dict(raw: dict) -> RunConfig:
    raw = dict(raw)
    schema = raw.pop("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ConfigError(f"unsupported config schema {schema!r}")
    _sub(RunConfig, raw, "config")
    kw = dict(raw)
    try:
        if "site" in kw:
            kw["site"] = SiteMeta.from_dict(kw["site"])
        if "narnn" in kw:
            kw["narnn"] = NarnnConfig(**_sub(NarnnConfig, kw["narnn"], "narnn"))
        if "armax" in kw:
            a = _sub(ArmaxConfig, kw["armax"], "armax")
            if a.get("fixed_orders") is not None:
                a["fixed_orders"] = ArmaxOrders(*a["fixed_orders"])
            kw["armax"] = ArmaxConfig(**a)
        if "adf" in kw:
            kw["adf"] = AdfConfig(**_sub(AdfConfig, kw["adf"], "adf"))
        if "csv" in kw:
            kw["csv"] = CsvOptions(**_sub(CsvOptions, kw["csv"], "csv"))
        return RunConfig(**kw)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None


def load_config(path: str | PathLike) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw)


def save_config(config: RunConfig, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
