"""Stationarising pre-processing and its exact inverse.

Forward: clear-sky offset -> drop night hours -> polynomial detrend over local
hour -> ADF check -> min-max normalisation.  Every parameter needed to undo
those steps lives in :class:`PreprocessArtifact`, which serialises to JSON so
a forecast can be inverted by a separate process.
"""

from __future__ import annotations

import contextlib
import json
import logging
import warnings
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from os import PathLike
from typing import Mapping

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P

from .adf import AdfResult, adf_test
from .errors import (
    AlignmentError,
    ConditioningError,
    ConfigError,
    DataError,
    GhicastError,
    MaskError,
    NonStationaryError,
    ShapeError,
    UnderdeterminedError,
    ZeroRangeError,
)
from .ingest import HOUR, IrradianceSeries, SiteMeta
from .solar import DaylightMask, clear_sky_for, clear_sky_hourly, daylight_mask

log = logging.getLogger(__name__)

ARTIFACT_SCHEMA = "ghicast.preprocess/1"
MAX_DEGREE = 8


class NonStationaryWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TrendModel:
    """Polynomial trend ``a0 + a1*h + ... + an*h**n`` over local hour ``h``."""

    degree: int
    coefficients: tuple[float, ...]

    def __post_init__(self):
        if len(self.coefficients) != self.degree + 1:
            raise ConfigError("coefficient count must equal degree + 1")
        if not np.all(np.isfinite(self.coefficients)):
            raise ConfigError("trend coefficients must be finite")

    def __call__(self, hours) -> np.ndarray:
        return P.polyval(np.asarray(hours, dtype=float), self.coefficients)


@dataclass(frozen=True)
class NormalizationParams:
    low: float
    high: float

    def __post_init__(self):
        if not (np.isfinite(self.low) and np.isfinite(self.high) and self.high > self.low):
            raise ZeroRangeError(f"normalisation needs finite high > low, got {self.low}, {self.high}")


# -- elementary steps ---------------------------------------------------------


def remove_offset(series: IrradianceSeries, clear_sky) -> np.ndarray:
    """Clear-sky offset ``clear_sky - ghi``; negative values are kept."""
    if isinstance(clear_sky, IrradianceSeries):
        if clear_sky.start != series.start or len(clear_sky) != len(series):
            raise AlignmentError(
                f"clear-sky span {clear_sky.start}+{len(clear_sky)}h does not match "
                f"series span {series.start}+{len(series)}h")
        cs = clear_sky.ghi
    else:
        cs = np.asarray(clear_sky, dtype=float)
        if cs.shape != series.ghi.shape:
            raise AlignmentError(f"clear-sky length {cs.size} != series length {len(series)}")
    return cs - series.ghi


def _masks_by_date(masks) -> dict[date, DaylightMask]:
    if isinstance(masks, Mapping):
        return dict(masks)
    return {m.date: m for m in masks}


def strip_nighttime(values, start: datetime, masks) -> tuple[np.ndarray, np.ndarray]:
    """Keep daylight samples of an hourly array beginning at ``start``.

    Returns the daytime samples and the indices they occupied, which
    :func:`reinsert_nighttime` uses to rebuild the hourly layout.
    """
    x = np.asarray(values, dtype=float)
    by_date = _masks_by_date(masks)
    keep = np.zeros(x.size, dtype=bool)
    t0 = datetime.combine(start.date(), datetime.min.time())
    offset = int((start - t0) // HOUR)
    n_days = (offset + x.size + 23) // 24
    for k in range(n_days):
        d = start.date() + timedelta(days=k)
        if d not in by_date:
            raise MaskError(f"no daylight mask for {d}")
        hrs = np.asarray(by_date[d].daylight_hours, dtype=int) + 24 * k - offset
        hrs = hrs[(hrs >= 0) & (hrs < x.size)]
        keep[hrs] = True
    idx = np.flatnonzero(keep)
    return x[idx], idx


def reinsert_nighttime(daytime, index_map, length: int, fill: float = 0.0) -> np.ndarray:
    out = np.full(length, fill, dtype=float)
    out[np.asarray(index_map, dtype=int)] = daytime
    return out


def fit_trend(values, hours, degree: int = 4) -> TrendModel:
    """Least-squares polynomial in local hour.

    Hours are mapped onto [-1, 1] before forming the normal equations; the
    solution is mapped back so coefficients refer to raw hours.
    """
    y = np.asarray(values, dtype=float)
    h = np.asarray(hours, dtype=float)
    if not 0 <= degree <= MAX_DEGREE:
        raise ConfigError(f"trend degree must be in [0, {MAX_DEGREE}], got {degree}")
    if y.shape != h.shape:
        raise ShapeError("values and hours differ in length")
    if y.size <= degree:
        raise UnderdeterminedError(f"{y.size} samples cannot determine a degree-{degree} trend")
    lo, hi = float(h.min()), float(h.max())
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo) or 1.0
    s = (h - center) / half
    V = np.vander(s, degree + 1, increasing=True)
    G = V.T @ V
    if np.linalg.cond(G) > 1e12:
        raise ConditioningError(
            f"trend design is rank deficient ({np.unique(h).size} distinct hours for degree {degree})")
    c_scaled = np.linalg.solve(G, V.T @ y)
    in_hours = Polynomial(c_scaled)(Polynomial([-center / half, 1.0 / half]))
    coef = np.zeros(degree + 1)
    coef[: in_hours.coef.size] = in_hours.coef
    return TrendModel(degree, tuple(float(c) for c in coef))


def detrend(values, hours, trend: TrendModel) -> np.ndarray:
    return np.asarray(values, dtype=float) - trend(hours)


def retrend(residuals, hours, trend: TrendModel) -> np.ndarray:
    return np.asarray(residuals, dtype=float) + trend(hours)


def normalize(values) -> tuple[np.ndarray, NormalizationParams]:
    x = np.asarray(values, dtype=float)
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi == lo:
        raise ZeroRangeError(f"cannot normalise a constant series (value {lo})")
    params = NormalizationParams(lo, hi)
    return (x - lo) / (hi - lo), params


def denormalize(values, params: NormalizationParams) -> np.ndarray:
    return np.asarray(values, dtype=float) * (params.high - params.low) + params.low


# -- pipeline -----------------------------------------------------------------


@dataclass(frozen=True)
class PreprocessConfig:
    detrend: bool = True
    degree: int = 4
    adf_max_lag: int | None = None
    significance: str = "5%"
    strict: bool = False

    def __post_init__(self):
        if not 0 <= self.degree <= MAX_DEGREE:
            raise ConfigError(f"detrend degree must be in [0, {MAX_DEGREE}]")


@dataclass(frozen=True, eq=False)
class PreprocessArtifact:
    site: SiteMeta
    start: datetime
    n_hours: int
    masks: dict[date, DaylightMask]
    clear_sky: np.ndarray
    index_map: np.ndarray
    trend: TrendModel | None
    norm: NormalizationParams
    adf: AdfResult | None
    config: PreprocessConfig = field(default_factory=PreprocessConfig)

    @property
    def hours(self) -> np.ndarray:
        """Local hour of every daytime sample."""
        return (self.start.hour + self.index_map) % 24

    def day_slice(self, d: date) -> slice:
        """Positions of ``d``'s daylight samples within the daytime series."""
        t0 = int((datetime.combine(d, datetime.min.time()) - self.start) // HOUR)
        lo, hi = np.searchsorted(self.index_map, [t0, t0 + 24])
        return slice(int(lo), int(hi))

    def mask_for(self, d: date) -> DaylightMask:
        return self.masks.get(d) or daylight_mask(self.site, d)

    def clear_sky_for(self, d: date) -> np.ndarray:
        t0 = datetime.combine(d, datetime.min.time())
        i0 = int((t0 - self.start) // HOUR)
        if 0 <= i0 and i0 + 24 <= self.n_hours:
            return self.clear_sky[i0:i0 + 24].copy()
        return clear_sky_hourly(self.site, t0, 24)

    def to_dict(self) -> dict:
        return {
            "schema": ARTIFACT_SCHEMA,
            "site": self.site.to_dict(),
            "start": self.start.isoformat(),
            "n_hours": self.n_hours,
            "masks": {d.isoformat(): list(m.daylight_hours) for d, m in sorted(self.masks.items())},
            "clear_sky": self.clear_sky.tolist(),
            "index_map": self.index_map.tolist(),
            "trend": None if self.trend is None else
            {"degree": self.trend.degree, "coefficients": list(self.trend.coefficients)},
            "norm": {"low": self.norm.low, "high": self.norm.high},
            "adf": None if self.adf is None else self.adf.to_dict(),
            "config": {"detrend": self.config.detrend, "degree": self.config.degree,
                       "adf_max_lag": self.config.adf_max_lag,
                       "significance": self.config.significance, "strict": self.config.strict},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessArtifact":
        if d.get("schema") != ARTIFACT_SCHEMA:
            raise DataError(f"unsupported artifact schema {d.get('schema')!r}")
        masks = {date.fromisoformat(k): DaylightMask(date.fromisoformat(k), tuple(v))
                 for k, v in d["masks"].items()}
        t = d["trend"]
        return cls(
            site=SiteMeta.from_dict(d["site"]),
            start=datetime.fromisoformat(d["start"]),
            n_hours=int(d["n_hours"]),
            masks=masks,
            clear_sky=np.asarray(d["clear_sky"], dtype=float),
            index_map=np.asarray(d["index_map"], dtype=int),
            trend=None if t is None else TrendModel(int(t["degree"]), tuple(t["coefficients"])),
            norm=NormalizationParams(**d["norm"]),
            adf=None if d["adf"] is None else AdfResult.from_dict(d["adf"]),
            config=PreprocessConfig(**d["config"]),
        )

    def save(self, path: str | PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | PathLike) -> "PreprocessArtifact":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except GhicastError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def apply_preprocess(series: IrradianceSeries, config: PreprocessConfig | None = None,
                     clear_sky_override: IrradianceSeries | None = None
                     ) -> tuple[np.ndarray, PreprocessArtifact]:
    """Run the forward pipeline over a gap-free hourly series.

    Returns the normalised daytime series and the artifact that inverts it.
    With ``config.detrend`` off the trend step is skipped and the ADF result
    is informational only.
    """
    config = config or PreprocessConfig()
    if series.missing_mask.any():
        raise DataError("pre-processing needs a gap-free series; run fill_missing first",
                        stage="offset")
    with _stage("offset"):
        cs = clear_sky_for(series, clear_sky_override)
        offset = remove_offset(series, cs)
    with _stage("nighttime"):
        first = series.start.date()
        last = (series.end - HOUR).date()
        dates = [first + timedelta(days=k) for k in range((last - first).days + 1)]
        masks = {d: daylight_mask(series.site, d) for d in dates}
        day, idx = strip_nighttime(offset, series.start, masks)
        hours = (series.start.hour + idx) % 24
    trend = None
    with _stage("detrend"):
        if config.detrend:
            trend = fit_trend(day, hours, config.degree)
            day = detrend(day, hours, trend)
    adf = None
    with _stage("adf"):
        # a constant series is left for normalisation to reject as zero-range
        if np.ptp(day) > 0:
            adf = adf_test(day, config.adf_max_lag, config.significance)
        if config.detrend and adf is not None and not adf.is_stationary:
            msg = (f"ADF statistic {adf.statistic:.3f} >= {adf.significance} critical value "
                   f"{adf.critical_values[adf.significance]:.3f}; series looks nonstationary")
            if config.strict:
                raise NonStationaryError(msg)
            warnings.warn(msg, NonStationaryWarning, stacklevel=2)
            log.warning(msg)
    with _stage("normalize"):
        z, norm = normalize(day)
    artifact = PreprocessArtifact(series.site, series.start, len(series), masks, cs, idx,
                                  trend, norm, adf, config)
    return z, artifact


def apply_postprocess(forecast, artifact: PreprocessArtifact, target_date: date,
                      clear_sky=None) -> IrradianceSeries:
    """Map a normalised daytime forecast for ``target_date`` back to 24 hourly GHI values.

    Final GHI is clamped to ``[0, clear_sky]``; night hours are exactly zero.
    ``clear_sky`` (24 values) overrides the artifact's reference for that day.
    """
    z = np.asarray(forecast, dtype=float).reshape(-1)
    mask = artifact.mask_for(target_date)
    if z.size != len(mask):
        raise ShapeError(
            f"forecast has {z.size} values but {target_date} has {len(mask)} daylight hours",
            stage="postprocess")
    hours = np.asarray(mask.daylight_hours, dtype=int)
    offset = denormalize(z, artifact.norm)
    if artifact.trend is not None:
        offset = retrend(offset, hours, artifact.trend)
    cs = artifact.clear_sky_for(target_date) if clear_sky is None else np.asarray(clear_sky, float)
    if cs.size != 24:
        raise ShapeError("clear-sky reference must have 24 hourly values", stage="postprocess")
    ghi = np.clip(cs[hours] - offset, 0.0, cs[hours])
    out = reinsert_nighttime(ghi, hours, 24)
    return IrradianceSeries(artifact.site, datetime.combine(target_date, datetime.min.time()), out)
