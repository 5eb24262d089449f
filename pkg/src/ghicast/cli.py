"""``ghicast`` command line: prepare, forecast, compare, synth and orders.

Every command reads one JSON run configuration; a few flags override it.
Outputs go under ``output_dir`` with names built from the site id, the date
and the case label, so reruns overwrite rather than accumulate.

Exit status: 0 success, 1 usage or configuration, 2 data, 3 numerical.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from datetime import date, timedelta
from pathlib import Path

from .config import STREAM_SYNTHETIC, RunConfig, load_config, save_config
from .errors import ConfigError, DataError, GhicastError
from .evaluate import PERSISTENCE, compare_cases, day_forecast_from_run, run_cases
from .ingest import IrradianceSeries, fill_missing, read_hourly_csv, write_canonical, write_table
from .pipeline import CASE1, CASE2, CASE3, CASES, forecast_day, scan_orders, stage_one, training_window
from .preprocess import apply_preprocess
from .synthetic import BENCHMARK_START, benchmark, benchmark_config

log = logging.getLogger("ghicast")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
CASE_ALIASES = {"case1": CASE1, "case2": CASE2, "case3": CASE3}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def _case(text: str) -> str:
    c = CASE_ALIASES.get(text, text)
    if c not in CASES:
        raise argparse.ArgumentTypeError(f"unknown case {text!r}; use case1, case2 or case3")
    return c


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ghicast", description="Day-ahead hourly GHI forecasting.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON run configuration")
        sp.add_argument("--data", help="override data_path")
        sp.add_argument("--output-dir", help="override output_dir")
        sp.add_argument("--seed", type=int, help="override the global seed")

    sp = sub.add_parser("prepare", help="validate data and write the pre-processing artifact")
    common(sp)
    sp.add_argument("--target", type=_date, help="first day to forecast (default: day after the data)")

    sp = sub.add_parser("forecast", help="forecast one day")
    common(sp)
    sp.add_argument("--target", type=_date, required=True)
    sp.add_argument("--case", type=_case, default=CASE1)

    sp = sub.add_parser("compare", help="run cases 1-3 and persistence on the same days")
    common(sp)
    sp.add_argument("--targets", type=_date, nargs="+", required=True)

    sp = sub.add_parser("synth", help="write the synthetic benchmark dataset and a matching config")
    common(sp, config_required=False)
    sp.add_argument("--start", type=_date, default=BENCHMARK_START)

    sp = sub.add_parser("orders", help="run the ARMAX order scan alone")
    common(sp)
    sp.add_argument("--target", type=_date, required=True)
    return p


def _resolve_config(args) -> RunConfig:
    if args.config and not Path(args.config).is_file():
        raise ConfigError(f"config file not found: {args.config}")
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {}
    if args.data:
        over["data_path"] = args.data
    if args.output_dir:
        over["output_dir"] = args.output_dir
    if args.seed is not None:
        over["seed"] = args.seed
    return replace(cfg, **over) if over else cfg


def _load_series(cfg: RunConfig) -> IrradianceSeries:
    if not cfg.data_path:
        raise ConfigError("no data_path in config and no --data given")
    path = Path(cfg.data_path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}", stage="ingest")
    c = cfg.csv
    try:
        series = read_hourly_csv(path, cfg.site, timestamp_col=c.timestamp_col, ghi_col=c.ghi_col,
                                 time_col=c.time_col, delimiter=c.delimiter, sentinel=c.sentinel,
                                 skip_rows=c.skip_rows, hour_ending=c.hour_ending)
        return fill_missing(series, cfg.fill_policy)
    except GhicastError as exc:
        exc.stage = exc.stage or "ingest"
        raise


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _next_day(series: IrradianceSeries) -> date:
    return (series.end - timedelta(hours=1)).date() + timedelta(days=1)


def cmd_prepare(cfg: RunConfig, target: date | None = None) -> list[Path]:
    series = _load_series(cfg)
    target = target or _next_day(series)
    out, site = _out(cfg), cfg.site.site_id
    canonical = out / f"{site}_series.csv"
    write_canonical(series, canonical)
    window = training_window(series, target, cfg.training_days)
    _, artifact = apply_preprocess(window, cfg.preprocess_config(detrend=True))
    art_path = out / f"{site}_{target.isoformat()}_artifact.json"
    artifact.save(art_path)
    adf_path = out / f"{site}_{target.isoformat()}_adf.json"
    _write_json(adf_path, artifact.adf.to_dict())
    a = artifact.adf
    print(f"ADF statistic {a.statistic:.4f} (lag {a.lag_order}, {a.significance} critical "
          f"{a.critical_values[a.significance]:.4f}): "
          f"{'stationary' if a.is_stationary else 'NOT stationary'}")
    return [canonical, art_path, adf_path]


def cmd_forecast(cfg: RunConfig, target: date, case: str = CASE1) -> dict:
    series = _load_series(cfg)
    out, site = _out(cfg), cfg.site.site_id
    run = forecast_day(series, target, cfg, case)
    day = day_forecast_from_run(run, series)
    prefix = f"{site}_{target.isoformat()}_{case}"
    files = {}

    fc_path = out / f"{prefix}_forecast.csv"
    write_canonical(IrradianceSeries(cfg.site, run.forecast.start, day.forecast_ghi), fc_path)
    files["forecast"] = fc_path.name
    if day.actual_ghi is not None:
        act_path = out / f"{site}_{target.isoformat()}_actual.csv"
        write_canonical(IrradianceSeries(cfg.site, run.forecast.start, day.actual_ghi), act_path)
        files["actual"] = act_path.name
    fit_path = out / f"{prefix}_fitting.csv"
    write_table(fit_path, ["hour", "fitting"],
                ((h, repr(float(v))) for h, v in zip(day.daylight_hours, run.fitting_series)))
    files["fitting"] = fit_path.name
    if day.scan:
        scan_path = out / f"{prefix}_orders.csv"
        write_table(scan_path, ["order", "test_nrmse"], ((k, repr(s)) for k, s in day.scan))
        files["orders"] = scan_path.name

    summary = day.to_dict()
    summary["files"] = files
    summary["site_id"] = site
    _write_json(out / f"{prefix}_summary.json", summary)
    print(f"{case} {target}: nrmse={'n/a' if day.nrmse is None else repr(day.nrmse)} "
          f"fitting_r2={'n/a' if day.fitting_r2 is None else f'{day.fitting_r2:.4f}'} "
          f"orders={summary['orders']}")
    return summary


def cmd_compare(cfg: RunConfig, targets: list[date]):
    series = _load_series(cfg)
    out, site = _out(cfg), cfg.site.site_id
    methods = list(CASES) + [PERSISTENCE]
    reports = run_cases(methods, series, targets, cfg)
    dates = sorted(set(targets))
    span = dates[0].isoformat() if len(dates) == 1 else f"{dates[0].isoformat()}_{dates[-1].isoformat()}"
    for c, r in reports.items():
        r.save(out / f"{site}_{span}_{c}_report.json")
        r.write_plot_files(out, site)
        for d, msg in r.failures:
            print(f"{c} failed on {d}: {msg}", file=sys.stderr)
    comp = compare_cases(reports)
    write_table(out / f"{site}_{span}_compare.csv", comp.header(), comp.table_rows())
    _write_json(out / f"{site}_{span}_compare.json", comp.to_dict())
    width = max(len(m) for m in methods) + 2
    print("method".ljust(width) + " ".join(d.isoformat().rjust(10) for d in dates) + "  aggregate")
    for c in methods:
        vals = [comp.scores[c][d] for d in dates] + [comp.aggregates[c]]
        print(c.ljust(width) + " ".join("failed".rjust(10) if v is None else f"{v:10.4f}" for v in vals))
    return comp


def cmd_synth(cfg: RunConfig, start: date = BENCHMARK_START) -> list[Path]:
    out, site = _out(cfg), cfg.site.site_id
    ds = benchmark(cfg.component_seed(STREAM_SYNTHETIC), site=cfg.site, start=start)
    stem = f"{site}_synthetic_seed{cfg.seed}"
    data_path = out / f"{stem}.csv"
    write_canonical(ds.series, data_path)
    meta_path = out / f"{stem}_targets.json"
    _write_json(meta_path, {"seed": cfg.seed, "targets": {k: v.isoformat() for k, v in ds.targets.items()},
                            "regimes": list(ds.regimes)})
    cfg_path = out / f"{stem}_config.json"
    save_config(replace(benchmark_config(cfg, ds), data_path=str(data_path)), cfg_path)
    print(" ".join(f"{k}={v}" for k, v in ds.targets.items()))
    return [data_path, meta_path, cfg_path]


def cmd_orders(cfg: RunConfig, target: date):
    series = _load_series(cfg)
    out, site = _out(cfg), cfg.site.site_id
    s1 = stage_one(series, target, cfg, detrend_on=True)
    sel = scan_orders(s1, target, cfg)
    path = out / f"{site}_{target.isoformat()}_{CASE1}_orders.csv"
    write_table(path, ["order", "test_nrmse" if sel.criterion == "error_scan" else "aic"],
                ((k, repr(s)) for k, s in sel.scan))
    for k, s in sel.scan:
        print(f"{k} {s:.6f}{'  <- selected' if k == sel.orders.n else ''}")
    for k, e in sel.failures.items():
        print(f"{k} failed: {e}")
    return sel


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)
    try:
        cfg = _resolve_config(args)
        if args.command == "prepare":
            cmd_prepare(cfg, args.target)
        elif args.command == "forecast":
            cmd_forecast(cfg, args.target, args.case)
        elif args.command == "compare":
            cmd_compare(cfg, args.targets)
        elif args.command == "synth":
            cmd_synth(cfg, args.start)
        elif args.command == "orders":
            cmd_orders(cfg, args.target)
    except FileNotFoundError as exc:
        print(f"ghicast: error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    except GhicastError as exc:
        print(f"ghicast: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
