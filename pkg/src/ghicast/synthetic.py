"""Seeded synthetic GHI benchmark.

GHI is the Haurwitz clear-sky value scaled by a cloud attenuation::

    attenuation = clip(1 - s * sigmoid(w + 0.25 * w**2), 0.05, 1)

where ``w`` is an hourly AR(2) process and ``s`` is the cloudiness of the
day's weather regime.  Regimes come in multi-day spells so yesterday carries
information about today, as in real day-ahead forecasting.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta

import numpy as np

from .ingest import DENVER, IrradianceSeries, SiteMeta
from .solar import clear_sky_hourly, daylight_mask

REGIME_CLOUDINESS = {"sunny": 0.1, "partly_cloudy": 0.5, "cloudy": 0.8}
AR2 = (1.2, -0.3)
AR2_SIGMA = 0.35
QUADRATIC = 0.25

BENCHMARK_START = date(2010, 6, 1)
BENCHMARK_DAYS = 60
# (regime, first day index, last day index) pinned around the three target days
BENCHMARK_SPELLS = (("sunny", 36, 41), ("partly_cloudy", 44, 49), ("cloudy", 52, 57))
BENCHMARK_TARGETS = {"sunny": 39, "partly_cloudy": 47, "cloudy": 55}


@dataclass(frozen=True)
class SyntheticDataset:
    series: IrradianceSeries
    regimes: tuple[str, ...]
    clear_sky: np.ndarray
    targets: dict[str, date]

    def regime_of(self, d: date) -> str:
        return self.regimes[(d - self.series.start.date()).days]


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def regime_schedule(n_days: int, rng: np.random.Generator, min_spell: int = 3,
                    max_spell: int = 7) -> list[str]:
    names = list(REGIME_CLOUDINESS)
    out: list[str] = []
    prev = None
    while len(out) < n_days:
        choices = [r for r in names if r != prev]
        regime = choices[rng.integers(len(choices))]
        out += [regime] * int(rng.integers(min_spell, max_spell + 1))
        prev = regime
    return out[:n_days]


def ar2_process(n: int, rng: np.random.Generator, phi=AR2, sigma: float = AR2_SIGMA,
                burn_in: int = 200) -> np.ndarray:
    e = rng.normal(0.0, sigma, n + burn_in)
    w = np.zeros(n + burn_in)
    for t in range(2, n + burn_in):
        w[t] = phi[0] * w[t - 1] + phi[1] * w[t - 2] + e[t]
    return w[burn_in:]


def generate(seed: int, n_days: int = BENCHMARK_DAYS, start: date = BENCHMARK_START,
             site: SiteMeta = DENVER, regimes: list[str] | None = None) -> SyntheticDataset:
    """Generate ``n_days`` of hourly GHI from ``seed``.

    ``regimes`` fixes the per-day weather; otherwise spells are drawn at random.
    """
    rng = np.random.default_rng(seed)
    if regimes is None:
        regimes = regime_schedule(n_days, rng)
    if len(regimes) != n_days:
        raise ValueError("one regime per day required")
    t0 = datetime.combine(start, datetime.min.time())
    n = 24 * n_days
    cs = clear_sky_hourly(site, t0, n)
    w = ar2_process(n, rng)
    s = np.repeat([REGIME_CLOUDINESS[r] for r in regimes], 24)
    att = np.clip(1.0 - s * _sigmoid(w + QUADRATIC * w**2), 0.05, 1.0)
    series = IrradianceSeries(site, t0, cs * att)
    return SyntheticDataset(series, tuple(regimes), cs, {})


def benchmark(seed: int, site: SiteMeta = DENVER, start: date = BENCHMARK_START) -> SyntheticDataset:
    """The 60-day benchmark with one sunny, partly cloudy and cloudy target day."""
    rng = np.random.default_rng([seed, 1])
    regimes = regime_schedule(BENCHMARK_DAYS, rng)
    for name, lo, hi in BENCHMARK_SPELLS:
        regimes[lo:hi + 1] = [name] * (hi - lo + 1)
    ds = generate(seed, BENCHMARK_DAYS, start, site, regimes)
    targets = {k: start + timedelta(days=v) for k, v in BENCHMARK_TARGETS.items()}
    return SyntheticDataset(ds.series, ds.regimes, ds.clear_sky, targets)


def benchmark_lags(ds: SyntheticDataset) -> int:
    """Lag count covering one daylight day at the benchmark's first target."""
    first = min(ds.targets.values())
    return len(daylight_mask(ds.series.site, first))


def benchmark_config(base, ds: SyntheticDataset):
    """``base`` run configuration with the NARNN lag count set to one daylight day."""
    return replace(base, narnn=replace(base.narnn, d=benchmark_lags(ds)))
