"""
Command-line front end.

    python src/cli.py ingest data/sample/seds.csv
    python src/cli.py select --config run.env
    python src/cli.py fit --config run.env --spec 2,1,0
    python src/cli.py forecast --config run.env --out out/total
    python src/cli.py suite --data-dir data/sample --out out/suite
    python src/cli.py render out/total

Exit status: 0 success, 1 failure, 2 partially completed suite. On failure the
first stderr line is `E_<CODE>: message`.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

from app_config import MODELS, build_config
from app_logging import configure_logging
from errors import ArgumentError, ForecastError, InputOutputError
from forecast_chart import ChartStyle, render_forecast_svg
from forecast_pipeline import fit_model, run_config, run_selection, run_suite
from holt_damped import PHI_MODES
from report_writer import CHART_FILE, TOOL_VERSION, load_report, plain
from seds_ingest import load_code_table, parse_seds_csv, summarize_records

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARTIAL = 2


class _Parser(argparse.ArgumentParser):
    """Usage errors become E_ARGUMENT failures instead of argparse's own exit status"""

    def error(self, message):
        raise ArgumentError(message)


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="KEY=VALUE run configuration file")
    parser.add_argument("--seds", dest="seds_csv", help="SEDS wide CSV file")
    parser.add_argument("--side", dest="side_files", action="append",
                        help="side file as name:path (repeatable)")
    parser.add_argument("--response", help="response MSN, or MSN+MSN for a sum")
    parser.add_argument("--exog", nargs="+", help="exogenous series: MSN or file:<name>")
    parser.add_argument("--model", choices=MODELS)
    parser.add_argument("--spec", help="p,d,q or auto")
    parser.add_argument("--holdout", type=int, help="backtest holdout years")
    parser.add_argument("--horizon", type=int, help="forecast horizon in years")
    parser.add_argument("--level", type=float, help="interval level, e.g. 0.95")
    parser.add_argument("--exclude-after", dest="exclude_after", type=int, help="drop years after this one")
    parser.add_argument("--scenario", help="CSV of future exogenous paths (year,<col>...)")
    parser.add_argument("--phi-mode", dest="phi_mode", choices=PHI_MODES)
    parser.add_argument("--exog-lag", dest="exog_lag", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--msn-table", dest="msn_table", help="extra MSN code table CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seds-forecast",
                     description="ARIMA, ARIMAX and damped-trend forecasts of SEDS energy series")
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING (default from FORECAST_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="validate and summarize a SEDS data file")
    ingest.add_argument("seds_csv")
    ingest.add_argument("--msn-table", dest="msn_table")

    for name, text in (("select", "KPSS d, AICc grid and holdout backtest"),
                       ("fit", "fit the configured model and print its summary"),
                       ("forecast", "fit, forecast and write report.json, forecast.csv, forecast.svg")):
        _add_run_flags(sub.add_parser(name, help=text))

    suite = sub.add_parser("suite", help="run the bundled nine-model suite plus damped-trend renewables")
    suite.add_argument("--data-dir", dest="data_dir", default=os.getenv("FORECAST_DATA_DIR"))
    suite.add_argument("--out", default=os.getenv("FORECAST_OUT_DIR", "suite_out"))
    suite.add_argument("--seed", type=int, default=0)
    suite.add_argument("--workers", type=int, default=4)

    render = sub.add_parser("render", help="re-render forecast.svg from a report")
    render.add_argument("report", help="report.json or the directory holding it")
    render.add_argument("--out", help="SVG path (default: next to the report)")
    return parser


def _overrides(args) -> dict:
    names = ("seds_csv", "response", "model", "spec", "holdout", "horizon", "level", "exclude_after",
             "scenario", "phi_mode", "exog_lag", "seed", "out", "msn_table")
    overrides = {name: getattr(args, name) for name in names}
    overrides["exog"] = tuple(args.exog) if args.exog else None
    overrides["side_files"] = ",".join(args.side_files) if args.side_files else None
    return overrides


def _print_json(document) -> None:
    print(json.dumps(plain(document), sort_keys=True, indent=2))


def cmd_ingest(args) -> int:
    table = load_code_table(extra=args.msn_table)
    records = parse_seds_csv(args.seds_csv, table)
    summary = summarize_records(records)
    print(summary.to_csv(index=False, float_format="%.6g", lineterminator="\n"), end="")
    return EXIT_OK


def cmd_select(args) -> int:
    _print_json(run_selection(build_config(args.config, _overrides(args))))
    return EXIT_OK


def cmd_fit(args) -> int:
    _, _, model, backtest = fit_model(build_config(args.config, _overrides(args)))
    _print_json({"model": model, "backtest": backtest})
    return EXIT_OK


def cmd_forecast(args) -> int:
    config = build_config(args.config, _overrides(args))
    report = run_config(config)
    print(report.forecast_csv(), end="")
    logger.info(f"reports for {config.name} in {config.out}")
    return EXIT_OK


def cmd_suite(args) -> int:
    if not args.data_dir:
        raise InputOutputError("suite needs --data-dir (or FORECAST_DATA_DIR)")
    result = run_suite(args.data_dir, args.out, max_workers=args.workers, seed=args.seed)
    if result.status == "complete":
        _print_json(result.summary())
        return EXIT_OK
    first = next(iter(sorted(result.skipped.items())))
    print(f"{first[1]} (suite {result.status}: {len(result.skipped)} of "
          f"{len(result.skipped) + len(result.reports)} models skipped)", file=sys.stderr)
    _print_json(result.summary())
    return EXIT_PARTIAL if result.status == "partial" else EXIT_FAILURE


def cmd_render(args) -> int:
    report = load_report(args.report)
    source = Path(args.report)
    if args.out:
        target = Path(args.out)
    else:
        target = source / CHART_FILE if source.is_dir() else source.with_name(CHART_FILE)
    try:
        target.write_text(render_forecast_svg(report.history, report.forecast, ChartStyle(),
                                              f"{report.label} forecast"), encoding="utf-8")
    except OSError as e:
        raise InputOutputError(f"cannot write {target}: {e.strerror or e}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "select": cmd_select,
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "suite": cmd_suite,
    "render": cmd_render,
}


def main(argv=None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except ArgumentError as e:
        print(e.one_line(), file=sys.stderr)
        return EXIT_FAILURE
    configure_logging(level=args.log_level, stream=args.verbose)
    try:
        return COMMANDS[args.command](args)
    except ForecastError as e:
        print(e.one_line(), file=sys.stderr)
        logger.error(e.one_line())
        return EXIT_FAILURE
    except OSError as e:
        error = InputOutputError(f"{e.filename or ''} {e.strerror or e}".strip())
        print(error.one_line(), file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
