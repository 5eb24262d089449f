import logging
import warnings
from datetime import date, datetime, timedelta

import numpy as np
import pytest
from hypothesis import settings

from ghicast.ingest import DENVER
from ghicast.preprocess import NonStationaryWarning
from ghicast.solar import clear_sky_hourly
from ghicast.synthetic import generate

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


@pytest.fixture(autouse=True)
def _quiet_adf_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonStationaryWarning)
        yield


@pytest.fixture(scope="session")
def cloudy30():
    """30 gap-free cloudy days, seed 0."""
    return generate(0, 30, regimes=["cloudy"] * 30)


def nsrdb_text(year: int = 2010, seed: int = 7, missing=(4000,)) -> str:
    """A site-year in the NSRDB 1991-2010 station layout (hour-ending LST, 24:00 rows)."""
    t0 = datetime(year, 1, 1)
    n = 24 * (date(year + 1, 1, 1) - date(year, 1, 1)).days
    cs = clear_sky_hourly(DENVER, t0, n)
    rng = np.random.default_rng(seed)
    att = np.clip(1 - 0.6 * rng.beta(0.7, 1.4, n // 24).repeat(24) * rng.uniform(0.5, 1.0, n), 0.05, 1)
    ghi = np.round(cs * att)
    lines = ["725650,DENVER INTL AP,CO,-7.0,39.833,-104.650,1640",
             "YYYY-MM-DD,HH:MM (LST),Zenith (deg),ETR (Wh/m^2),METSTAT Glo (Wh/m^2),METSTAT Glo flg"]
    for i in range(n):
        end = t0 + timedelta(hours=i + 1)
        day, hh = (end - timedelta(days=1), 24) if end.hour == 0 else (end, end.hour)
        v = -9999 if i in missing else int(ghi[i])
        lines.append(f"{day:%Y-%m-%d},{hh:02d}:00,90.0,0,{v},1")
    return "\n".join(lines) + "\n"


NSRDB_OPTIONS = dict(timestamp_col="YYYY-MM-DD", time_col="HH:MM (LST)",
                     ghi_col="METSTAT Glo (Wh/m^2)", skip_rows=1, hour_ending=True)


@pytest.fixture(scope="session")
def nsrdb_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("nsrdb") / "725650_2010.csv"
    p.write_text(nsrdb_text())
    return p


@pytest.fixture(autouse=True)
def _no_log_noise(caplog):
    caplog.set_level(logging.ERROR)
    yield


_ACCEPTANCE: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
