"""Solar geometry and the Haurwitz clear-sky model.

Declination and equation of time use Spencer's Fourier series in the day
angle; hour angle comes from local clock time corrected for longitude against
the standard meridian of ``utc_offset``.  Accuracy is well under a degree,
which is all the day-length mask and the clear-sky reference need.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, timedelta

import numpy as np

from .errors import AlignmentError, RangeError
from .ingest import HOUR, IrradianceSeries, SiteMeta

HAURWITZ_SCALE = 1098.0
HAURWITZ_EXTINCTION = 0.057


@dataclass(frozen=True)
class SolarPosition:
    zenith: float
    declination: float
    hour_angle: float


@dataclass(frozen=True)
class DaylightMask:
    date: date
    daylight_hours: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.daylight_hours)

    def as_bool(self) -> np.ndarray:
        m = np.zeros(24, dtype=bool)
        m[list(self.daylight_hours)] = True
        return m


def _day_angle(doy):
    return 2.0 * np.pi * (np.asarray(doy, dtype=float) - 1.0) / 365.0


def declination(doy) -> np.ndarray:
    """Solar declination in degrees for day-of-year ``doy`` (1-366)."""
    g = _day_angle(doy)
    rad = (0.006918 - 0.399912 * np.cos(g) + 0.070257 * np.sin(g)
           - 0.006758 * np.cos(2 * g) + 0.000907 * np.sin(2 * g)
           - 0.002697 * np.cos(3 * g) + 0.00148 * np.sin(3 * g))
    return np.degrees(rad)


def equation_of_time(doy) -> np.ndarray:
    """Equation of time in minutes."""
    g = _day_angle(doy)
    return 229.18 * (0.000075 + 0.001868 * np.cos(g) - 0.032077 * np.sin(g)
                     - 0.014615 * np.cos(2 * g) - 0.040849 * np.sin(2 * g))


def _solar_angles(site: SiteMeta, doy, clock_hours):
    """Return (zenith, declination, hour angle) in degrees, vectorised."""
    decl = declination(doy)
    correction_min = 4.0 * (site.longitude - 15.0 * site.utc_offset) + equation_of_time(doy)
    solar_time = np.asarray(clock_hours, dtype=float) + correction_min / 60.0
    hour_angle = 15.0 * (solar_time - 12.0)
    phi, d, h = np.radians(site.latitude), np.radians(decl), np.radians(hour_angle)
    cos_z = np.sin(phi) * np.sin(d) + np.cos(phi) * np.cos(d) * np.cos(h)
    zenith = np.degrees(np.arccos(np.clip(cos_z, -1.0, 1.0)))
    return zenith, decl, hour_angle


def _check_year(ts: datetime | date) -> None:
    if not 1900 <= ts.year <= 2100:
        raise RangeError(f"{ts} outside supported years 1900-2100")


def solar_position(site: SiteMeta, timestamp: datetime) -> SolarPosition:
    _check_year(timestamp)
    doy = timestamp.timetuple().tm_yday
    clock = timestamp.hour + timestamp.minute / 60.0 + timestamp.second / 3600.0
    z, d, h = _solar_angles(site, doy, clock)
    return SolarPosition(float(z), float(d), float(h))


def solar_noon(site: SiteMeta, d: date) -> datetime:
    """Local clock time at which the hour angle is zero."""
    _check_year(d)
    doy = d.timetuple().tm_yday
    correction_min = 4.0 * (site.longitude - 15.0 * site.utc_offset) + float(equation_of_time(doy))
    return datetime.combine(d, datetime.min.time()) + timedelta(minutes=720.0 - correction_min)


def haurwitz(zenith_deg) -> np.ndarray:
    """Clear-sky GHI (W/m^2) from zenith angle; zero with the sun at or below the horizon."""
    z = np.asarray(zenith_deg, dtype=float)
    cos_z = np.cos(np.radians(z))
    up = z < 90.0
    safe = np.where(up, cos_z, 1.0)
    return np.where(up, HAURWITZ_SCALE * safe * np.exp(-HAURWITZ_EXTINCTION / safe), 0.0)


def clear_sky_ghi(site: SiteMeta, timestamp: datetime) -> float:
    return float(haurwitz(solar_position(site, timestamp).zenith))


def clear_sky_hourly(site: SiteMeta, start: datetime, n_hours: int) -> np.ndarray:
    """Clear-sky GHI for ``n_hours`` hourly intervals starting at ``start``.

    Each interval is represented by its midpoint (hh:30), matching the
    daylight test.
    """
    if n_hours == 0:
        return np.zeros(0)
    _check_year(start)
    mids = [start + i * HOUR + timedelta(minutes=30) for i in range(n_hours)]
    doy = np.array([t.timetuple().tm_yday for t in mids])
    clock = np.array([t.hour + t.minute / 60.0 for t in mids])
    z, _, _ = _solar_angles(site, doy, clock)
    return haurwitz(z)


def clear_sky_for(series: IrradianceSeries, override: IrradianceSeries | None = None) -> np.ndarray:
    """Clear-sky values aligned with ``series``; ``override`` supplies a user table."""
    if override is None:
        return clear_sky_hourly(series.site, series.start, len(series))
    if override.start > series.start or override.end < series.end:
        raise AlignmentError("clear-sky override does not cover the series")
    i0 = override.index_of(series.start)
    vals = override.ghi[i0:i0 + len(series)]
    if np.isnan(vals).any():
        raise AlignmentError("clear-sky override has missing values inside the series span")
    return np.array(vals)


def daylight_mask(site: SiteMeta, d: date) -> DaylightMask:
    """Hours of ``d`` whose midpoint has the sun above the horizon.

    Membership is decided by a positive Haurwitz clear-sky value, which is the
    zenith < 90 degree test except where the model underflows a hair above
    the horizon, so the mask and the clear-sky reference always agree.
    """
    cs = clear_sky_hourly(site, datetime.combine(d, datetime.min.time()), 24)
    return DaylightMask(d, tuple(int(h) for h in np.flatnonzero(cs > 0)))


def daylight_masks(site: SiteMeta, dates) -> dict[date, DaylightMask]:
    return {d: daylight_mask(site, d) for d in dates}
