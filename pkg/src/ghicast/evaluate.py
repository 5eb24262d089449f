"""Evaluation harness: per-day forecasts, case reports and cross-case comparison.

NRMSE is always taken over the target day's daylight hours.  Forecast and
actual GHI are quantised to the 0.1 W/m^2 precision of the canonical file
before scoring, so a score can be recomputed exactly from emitted files.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from os import PathLike
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .armax import ArmaxOrders
from .config import RunConfig
from .errors import AlignmentError, GhicastError, RangeError
from .ingest import IrradianceSeries, slice_window, write_table
from .metrics import nrmse
from .pipeline import CASE1, CASE2, CASES, DayRun, StageOneResult, forecast_day, stage_one
from .solar import daylight_mask

log = logging.getLogger(__name__)

__all__ = [
    "PERSISTENCE", "REFERENCE_RESULTS", "DayForecast", "EvaluationReport", "Comparison",
    "nrmse", "quantize", "persistence_forecast", "run_case", "run_cases", "compare_cases",
    "compare_scores", "improvement",
]

REPORT_SCHEMA = "ghicast.report/1"
COMPARISON_SCHEMA = "ghicast.comparison/1"
PERSISTENCE = "persistence"

# published real-data results for context only: (R^2, NRMSE) per day type
REFERENCE_RESULTS = {
    "cloudy": (0.90, 0.085),
    "partly_cloudy": (0.91, 0.100),
    "sunny": (0.86, 0.048),
}


def quantize(values) -> np.ndarray:
    """Round to the canonical file's one-decimal precision, exactly as it will be re-read."""
    v = np.asarray(values, dtype=float).reshape(-1)
    return np.array([float(f"{x:.1f}") + 0.0 for x in v])


def _day_start(d: date) -> datetime:
    return datetime.combine(d, datetime.min.time())


@dataclass(frozen=True, eq=False)
class DayForecast:
    case: str
    target_date: date
    forecast_ghi: np.ndarray
    actual_ghi: np.ndarray | None
    daylight_hours: tuple[int, ...]
    nrmse: float | None
    fitting_r2: float | None = None
    training_r2: float | None = None
    orders: ArmaxOrders | None = None
    scan: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        f = np.asarray(self.forecast_ghi, dtype=float)
        if f.shape != (24,):
            raise RangeError(f"forecast must hold 24 hourly values, got shape {f.shape}")
        night = np.setdiff1d(np.arange(24), self.daylight_hours)
        if np.any(f[night] != 0.0):
            raise RangeError("forecast must be zero outside daylight hours")
        if self.actual_ghi is not None and np.asarray(self.actual_ghi).shape != (24,):
            raise RangeError("actual must hold 24 hourly values")
        if self.nrmse is not None and not self.nrmse >= 0:
            raise RangeError(f"NRMSE must be >= 0, got {self.nrmse}")

    def to_dict(self) -> dict:
        o = self.orders
        return {
            "case": self.case,
            "target_date": self.target_date.isoformat(),
            "forecast_ghi": [float(x) for x in self.forecast_ghi],
            "actual_ghi": None if self.actual_ghi is None else [float(x) for x in self.actual_ghi],
            "daylight_hours": list(self.daylight_hours),
            "nrmse": self.nrmse,
            "fitting_r2": self.fitting_r2,
            "training_r2": self.training_r2,
            "orders": None if o is None else [o.n, o.m, o.r],
            "scan": [[k, s] for k, s in self.scan],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DayForecast":
        return cls(
            case=d["case"],
            target_date=date.fromisoformat(d["target_date"]),
            forecast_ghi=np.asarray(d["forecast_ghi"], dtype=float),
            actual_ghi=None if d["actual_ghi"] is None else np.asarray(d["actual_ghi"], dtype=float),
            daylight_hours=tuple(d["daylight_hours"]),
            nrmse=d["nrmse"],
            fitting_r2=d["fitting_r2"],
            training_r2=d["training_r2"],
            orders=None if d["orders"] is None else ArmaxOrders(*d["orders"]),
            scan=tuple((int(k), float(s)) for k, s in d["scan"]),
        )


def _score(actual: np.ndarray | None, forecast: np.ndarray, hours) -> float | None:
    if actual is None:
        return None
    h = np.asarray(hours, dtype=int)
    return nrmse(actual[h], forecast[h])


def _actual_for(dataset: IrradianceSeries, d: date) -> np.ndarray | None:
    if not (dataset.start <= _day_start(d) and _day_start(d + timedelta(days=1)) <= dataset.end):
        return None
    a = slice_window(dataset, d, 1).ghi
    return None if np.isnan(a).any() else quantize(a)


def day_forecast_from_run(run: DayRun, dataset: IrradianceSeries) -> DayForecast:
    hours = run.artifact.mask_for(run.target_date).daylight_hours
    fc = quantize(run.forecast.ghi)
    actual = _actual_for(dataset, run.target_date)
    sel = run.selection
    return DayForecast(
        case=run.case, target_date=run.target_date, forecast_ghi=fc, actual_ghi=actual,
        daylight_hours=hours, nrmse=_score(actual, fc, hours), fitting_r2=run.fitting_r2,
        training_r2=run.training_r2, orders=None if run.armax is None else run.armax.orders,
        scan=() if sel is None else sel.scan)


def persistence_forecast(history: IrradianceSeries, target_date: date) -> np.ndarray:
    """Tomorrow equals today: the 24 values of the day before ``target_date``."""
    prev = target_date - timedelta(days=1)
    try:
        values = slice_window(history, prev, 1).ghi
    except RangeError:
        raise RangeError(f"persistence needs {prev}, which is outside the history") from None
    if np.isnan(values).any():
        raise RangeError(f"persistence needs a complete {prev}; it has missing hours")
    return values.copy()


def persistence_day(dataset: IrradianceSeries, target: date) -> DayForecast:
    hours = daylight_mask(dataset.site, target).daylight_hours
    fc = persistence_forecast(dataset, target)
    night = np.setdiff1d(np.arange(24), hours)
    fc[night] = 0.0
    fc = quantize(fc)
    actual = _actual_for(dataset, target)
    return DayForecast(PERSISTENCE, target, fc, actual, hours, _score(actual, fc, hours))


@dataclass(frozen=True)
class EvaluationReport:
    case: str
    days: tuple[DayForecast, ...] = ()
    failures: tuple[tuple[date, str], ...] = ()
    reference: dict = field(default_factory=lambda: dict(REFERENCE_RESULTS))

    @property
    def target_dates(self) -> list[date]:
        return sorted([d.target_date for d in self.days] + [d for d, _ in self.failures])

    @property
    def scores(self) -> dict[date, float | None]:
        return {d.target_date: d.nrmse for d in self.days}

    @property
    def aggregate(self) -> float | None:
        """Mean of the per-day NRMSE values; ``None`` when no day was scored."""
        vals = [v for v in self.scores.values() if v is not None]
        return float(np.mean(vals)) if vals else None

    def day(self, d: date) -> DayForecast:
        for f in self.days:
            if f.target_date == d:
                return f
        raise KeyError(d)

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "case": self.case,
            "aggregate_nrmse": self.aggregate,
            "days": [d.to_dict() for d in self.days],
            "failures": [[d.isoformat(), msg] for d, msg in self.failures],
            "reference_results": {k: {"r2": r2, "nrmse": e} for k, (r2, e) in self.reference.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        if d.get("schema") != REPORT_SCHEMA:
            raise RangeError(f"unsupported report schema {d.get('schema')!r}")
        ref = {k: (v["r2"], v["nrmse"]) for k, v in d.get("reference_results", {}).items()}
        return cls(d["case"], tuple(DayForecast.from_dict(x) for x in d["days"]),
                   tuple((date.fromisoformat(a), m) for a, m in d["failures"]), ref)

    def save(self, path: str | PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | PathLike) -> "EvaluationReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def write_plot_files(self, out_dir: str | PathLike, site_id: str) -> list[Path]:
        """One ``hour,ghi`` table per day, named ``<site>_<date>_<case>_plot.csv``."""
        out = Path(out_dir)
        paths = []
        for f in self.days:
            p = out / f"{site_id}_{f.target_date.isoformat()}_{self.case}_plot.csv"
            write_table(p, ["hour", "ghi"], ((h, f"{v:.1f}") for h, v in enumerate(f.forecast_ghi)))
            paths.append(p)
        return paths


def run_cases(cases: Sequence[str], dataset: IrradianceSeries, target_dates: Iterable[date],
              config: RunConfig) -> dict[str, EvaluationReport]:
    """Run several cases over the same dates.

    Cases 1 and 3 share the detrended stage-one training for each date; since
    training is deterministic this gives the same result as separate runs.
    """
    for c in cases:
        if c not in CASES and c != PERSISTENCE:
            raise ValueError(f"unknown case {c!r}")
    dates = sorted(set(target_dates))
    days: dict[str, list[DayForecast]] = {c: [] for c in cases}
    failures: dict[str, list[tuple[date, str]]] = {c: [] for c in cases}
    for d in dates:
        shared: dict[bool, StageOneResult | GhicastError] = {}
        for c in cases:
            try:
                if c == PERSISTENCE:
                    days[c].append(persistence_day(dataset, d))
                    continue
                detrend_on = c != CASE2
                if detrend_on not in shared:
                    try:
                        shared[detrend_on] = stage_one(dataset, d, config, detrend_on)
                    except GhicastError as exc:
                        shared[detrend_on] = exc
                s1 = shared[detrend_on]
                if isinstance(s1, GhicastError):
                    raise s1
                run = forecast_day(dataset, d, config, c, stage1=s1)
                days[c].append(day_forecast_from_run(run, dataset))
            except GhicastError as exc:
                log.warning("%s failed on %s: %s", c, d, exc)
                failures[c].append((d, str(exc)))
    return {c: EvaluationReport(c, tuple(days[c]), tuple(failures[c])) for c in cases}


def run_case(case_id: str, dataset: IrradianceSeries, target_dates: Iterable[date],
             config: RunConfig) -> EvaluationReport:
    """Evaluate one case on each target date; per-day failures are recorded, not raised."""
    return run_cases([case_id], dataset, target_dates, config)[case_id]


def improvement(nrmse_a: float | None, nrmse_b: float | None) -> float | None:
    """Percentage improvement of A over B, ``100 (1 - A / B)``."""
    if nrmse_a is None or nrmse_b is None or nrmse_b == 0:
        return None
    return 100.0 * (1.0 - nrmse_a / nrmse_b)


@dataclass(frozen=True)
class Comparison:
    baseline: str
    dates: tuple[date, ...]
    scores: dict[str, dict[date, float | None]]
    aggregates: dict[str, float | None]
    improvements: dict[str, dict[str, float | None]]  # other case -> {date iso | "aggregate": pct}

    def table_rows(self) -> list[list[str]]:
        def fmt(v):
            return "" if v is None else repr(float(v))
        rows = []
        for c, per_day in self.scores.items():
            rows.append([c] + [fmt(per_day.get(d)) for d in self.dates] + [fmt(self.aggregates[c])])
        for c, imp in self.improvements.items():
            rows.append([f"improvement_vs_{c}_pct"]
                        + [fmt(imp[d.isoformat()]) for d in self.dates] + [fmt(imp["aggregate"])])
        return rows

    def header(self) -> list[str]:
        return ["method"] + [d.isoformat() for d in self.dates] + ["aggregate"]

    def to_dict(self) -> dict:
        return {
            "schema": COMPARISON_SCHEMA,
            "baseline": self.baseline,
            "dates": [d.isoformat() for d in self.dates],
            "scores": {c: {d.isoformat(): v for d, v in s.items()} for c, s in self.scores.items()},
            "aggregates": self.aggregates,
            "improvements": self.improvements,
        }


def compare_scores(scores: Mapping[str, Mapping[date, float | None]], baseline: str = CASE1,
                   aggregates: Mapping[str, float | None] | None = None) -> Comparison:
    """Side-by-side NRMSE with improvement of ``baseline`` over every other method.

    ``aggregates`` defaults to the mean of each method's scored days.
    """
    if baseline not in scores:
        raise AlignmentError(f"baseline {baseline!r} missing from the compared methods")
    dates = tuple(sorted(scores[baseline]))
    for c, s in scores.items():
        if tuple(sorted(s)) != dates:
            raise AlignmentError(f"{c} covers {sorted(s)} but {baseline} covers {list(dates)}")
    if aggregates is None:
        aggregates = {}
        for c, s in scores.items():
            vals = [v for v in s.values() if v is not None]
            aggregates[c] = float(np.mean(vals)) if vals else None
    imps = {}
    base = scores[baseline]
    for c, s in scores.items():
        if c == baseline:
            continue
        imp = {d.isoformat(): improvement(base[d], s[d]) for d in dates}
        imp["aggregate"] = improvement(aggregates[baseline], aggregates[c])
        imps[c] = imp
    return Comparison(baseline, dates, {c: dict(s) for c, s in scores.items()}, dict(aggregates), imps)


def compare_cases(reports: Mapping[str, EvaluationReport] | Sequence[EvaluationReport],
                  baseline: str = CASE1) -> Comparison:
    """Compare reports covering identical target dates (failed days count as unscored)."""
    if not isinstance(reports, Mapping):
        reports = {r.case: r for r in reports}
    scores = {}
    for c, r in reports.items():
        s: dict[date, float | None] = dict(r.scores)
        for d, _ in r.failures:
            s[d] = None
        scores[c] = s
    return compare_scores(scores, baseline, {c: r.aggregate for c, r in reports.items()})

