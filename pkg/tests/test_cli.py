import json
from datetime import date, datetime

import numpy as np
import pytest

from ghicast.cli import main
from ghicast.ingest import DENVER, IrradianceSeries, read_canonical, read_table, write_canonical
from ghicast.metrics import nrmse
from ghicast.pipeline import CASE1
from ghicast.solar import clear_sky_hourly

from conftest import NSRDB_OPTIONS

FAST = {"training_days": 12, "narnn": {"d": 4, "hidden_units": 4, "max_epochs": 20},
        "armax": {"max_order": 2, "train_days": 4}}


@pytest.fixture(scope="module")
def synth(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--output-dir", str(out), "--seed", "3"]) == 0
    cfg_path = out / "725650_synthetic_seed3_config.json"
    cfg = json.loads(cfg_path.read_text())
    cfg.update(FAST)
    fast = out / "fast.json"
    fast.write_text(json.dumps(cfg))
    targets = json.loads((out / "725650_synthetic_seed3_targets.json").read_text())["targets"]
    return out, fast, targets


def write_config(path, **kw):
    path.write_text(json.dumps({**FAST, **kw}))
    return path


def recompute(out, summary):
    fc = read_canonical(out / summary["files"]["forecast"], DENVER).ghi
    act = read_canonical(out / summary["files"]["actual"], DENVER).ghi
    h = summary["daylight_hours"]
    return nrmse(act[h], fc[h])


def test_synth_outputs(synth):
    out, _, targets = synth
    assert set(targets) == {"sunny", "partly_cloudy", "cloudy"}
    s = read_canonical(out / "725650_synthetic_seed3.csv", DENVER)
    assert len(s) == 24 * 60


def test_prepare_and_forecast(synth, tmp_path, capsys):
    _, cfg, targets = synth
    d = targets["sunny"]
    assert main(["prepare", "--config", str(cfg), "--output-dir", str(tmp_path), "--target", d]) == 0
    assert (tmp_path / f"725650_{d}_artifact.json").is_file()
    assert json.loads((tmp_path / f"725650_{d}_adf.json").read_text())["statistic"] < 0
    capsys.readouterr()
    assert main(["forecast", "--config", str(cfg), "--output-dir", str(tmp_path), "--target", d]) == 0
    printed = capsys.readouterr().out
    summary = json.loads((tmp_path / f"725650_{d}_{CASE1}_summary.json").read_text())
    fc = read_canonical(tmp_path / summary["files"]["forecast"], DENVER).ghi
    assert fc.size == 24
    night = np.setdiff1d(np.arange(24), summary["daylight_hours"])
    assert np.all(fc[night] == 0.0)
    # the score recomputes bit for bit from the emitted files
    assert recompute(tmp_path, summary) == summary["nrmse"]
    assert f"nrmse={summary['nrmse']!r}" in printed
    header, rows = read_table(tmp_path / summary["files"]["orders"])
    assert header == ["order", "test_nrmse"] and len(rows) == 2


def test_forecast_is_byte_identical(synth, tmp_path):
    _, cfg, targets = synth
    d = targets["cloudy"]
    runs = []
    for k in range(2):
        out = tmp_path / str(k)
        assert main(["forecast", "--config", str(cfg), "--output-dir", str(out), "--target", d,
                     "--case", "case3"]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert runs[0] == runs[1]


def test_compare_table_shape(synth, tmp_path):
    _, cfg, targets = synth
    days = sorted(targets.values())
    assert main(["compare", "--config", str(cfg), "--output-dir", str(tmp_path), "--targets", *days]) == 0
    header, rows = read_table(tmp_path / f"725650_{days[0]}_{days[-1]}_compare.csv")
    assert header == ["method"] + days + ["aggregate"]
    methods = [r[0] for r in rows if not r[0].startswith("improvement")]
    assert len(methods) == 4
    scored = sum(1 for r in rows[:4] for v in r[1:-1] if v)
    assert len(list(tmp_path.glob("*_plot.csv"))) == scored

    single = tmp_path / "one"
    assert main(["compare", "--config", str(cfg), "--output-dir", str(single), "--targets", days[0]]) == 0
    header, rows = read_table(single / f"725650_{days[0]}_compare.csv")
    assert header == ["method", days[0], "aggregate"]


def test_orders_command(synth, tmp_path):
    _, cfg, targets = synth
    d = targets["partly_cloudy"]
    assert main(["orders", "--config", str(cfg), "--output-dir", str(tmp_path), "--target", d]) == 0
    header, rows = read_table(tmp_path / f"725650_{d}_{CASE1}_orders.csv")
    assert [r[0] for r in rows] == ["1", "2"]


def test_strict_adf_exits_nonzero(tmp_path, capsys):
    n = 24 * 40
    cs = clear_sky_hourly(DENVER, datetime(2010, 6, 1), n)
    walk = np.cumsum(np.random.default_rng(0).normal(0, 0.03, n))
    data = tmp_path / "walk.csv"
    write_canonical(IrradianceSeries(DENVER, datetime(2010, 6, 1), cs * np.clip(0.6 + walk, 0.05, 1)), data)
    cfg = write_config(tmp_path / "c.json", data_path=str(data), training_days=39,
                       adf={"strict": True})
    rc = main(["forecast", "--config", str(cfg), "--output-dir", str(tmp_path), "--target", "2010-07-10"])
    assert rc == 3
    assert "ADF statistic" in capsys.readouterr().err


def test_error_exit_codes(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", data_path=str(tmp_path / "absent.csv"))
    assert main(["forecast", "--config", str(cfg), "--target", "2010-07-01"]) == 2
    assert main(["forecast", "--config", str(tmp_path / "nope.json"), "--target", "2010-07-01"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"unknown_key": 1}))
    assert main(["prepare", "--config", str(bad)]) == 1
    with pytest.raises(SystemExit) as e:
        main(["forecast", "--config", str(cfg), "--target", "not-a-date"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1


def test_forecast_beyond_data_has_no_score(synth, tmp_path, capsys):
    out, cfg, _ = synth
    assert main(["forecast", "--config", str(cfg), "--output-dir", str(tmp_path), "--target", "2010-07-31"]) == 0
    s = json.loads((tmp_path / f"725650_2010-07-31_{CASE1}_summary.json").read_text())
    assert s["nrmse"] is None and "actual" not in s["files"]
    assert "nrmse=n/a" in capsys.readouterr().out


def test_nsrdb_site_year(nsrdb_file, tmp_path):
    cfg = write_config(tmp_path / "c.json", data_path=str(nsrdb_file), csv=NSRDB_OPTIONS)
    d = date(2010, 7, 15).isoformat()
    assert main(["forecast", "--config", str(cfg), "--output-dir", str(tmp_path), "--target", d]) == 0
    s = json.loads((tmp_path / f"725650_{d}_{CASE1}_summary.json").read_text())
    assert recompute(tmp_path, s) == s["nrmse"]
