"""Command-line front end: run experiments, verify every gate, emit plot data.

Reports land in the directory named by --outdir or the MODSEL_OUTDIR
environment variable (default ./modsel-out). Exit code 0 means every gate
in the requested run passed. Runtimes go to stderr only; report files are
byte-identical across reruns with the same seeds.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .experiments import (
    PLOT_KINDS,
    default_config,
    emit_plot_data,
    list_experiments,
    load_config,
    run_experiment,
)
from .reporting import RiskReport, write_report_csv

OUTDIR_ENV = "MODSEL_OUTDIR"


def _outdir(args) -> Path:
    path = Path(args.outdir or os.environ.get(OUTDIR_ENV, "modsel-out"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _persist(report: RiskReport, outdir: Path) -> None:
    write_report_csv(outdir / f"{report.experiment}.csv", report)
    for name, text in sorted(report.tables.items()):
        (outdir / f"{report.experiment}.{name}.txt").write_text(text)
    status = "pass" if report.passed else "FAIL"
    print(f"{report.experiment}: {status} ({len(report.rows)} rows)")
    print(f"  runtime: {report.runtime_s:.1f}s", file=sys.stderr)


def cmd_run(args) -> int:
    config = load_config(args.config) if Path(args.config).exists() else default_config(args.config, args.profile)
    report = run_experiment(config)
    _persist(report, _outdir(args))
    return 0 if report.passed else 1


def cmd_list(_args) -> int:
    for name, description in list_experiments():
        print(f"{name}: {description}")
    return 0


def cmd_verify_all(args) -> int:
    outdir = _outdir(args)
    ok = True
    for name, _ in list_experiments():
        report = run_experiment(default_config(name, args.profile))
        _persist(report, outdir)
        ok = ok and report.passed
    print("verify-all:", "pass" if ok else "FAIL")
    return 0 if ok else 1


def cmd_emit_plots(args) -> int:
    import csv

    from .reporting import CSV_COLUMNS, ReportRow

    rows = []
    with Path(args.report).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header == list(CSV_COLUMNS):
            for parts in reader:
                if len(parts) != len(CSV_COLUMNS):
                    continue
                rows.append(
                    ReportRow(
                        parts[0],
                        int(parts[1]),
                        parts[2],
                        float(parts[3]),
                        float(parts[4]),
                        float(parts[5]),
                        int(parts[6]),
                        int(parts[7]),
                        {"true": True, "false": False, "": None}[parts[8]],
                    )
                )
    name = Path(args.report).stem
    report = RiskReport(name, rows)
    outdir = _outdir(args)
    for kind in args.kinds or PLOT_KINDS:
        text = emit_plot_data(report, kind)
        path = outdir / f"{name}.{kind}.csv"
        path.write_text(text)
        print(path)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="modsel", description=__doc__)
    parser.add_argument("--outdir", help=f"output directory (or ${OUTDIR_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a config file (or by name with defaults)")
    p_run.add_argument("config", help="path to a TOML config, or an experiment name")
    p_run.add_argument("--profile", choices=("full", "quick"), default="full")
    p_run.set_defaults(fn=cmd_run)

    p_list = sub.add_parser("list-experiments", help="list registered experiments")
    p_list.set_defaults(fn=cmd_list)

    p_all = sub.add_parser("verify-all", help="run every experiment; exit 0 only if all gates pass")
    p_all.add_argument("--profile", choices=("full", "quick"), default="full")
    p_all.set_defaults(fn=cmd_verify_all)

    p_plot = sub.add_parser("emit-plots", help="emit (x, y, y_err, bound) tables from a report CSV")
    p_plot.add_argument("report", help="path to a report CSV produced by run/verify-all")
    p_plot.add_argument("--kinds", nargs="*", choices=PLOT_KINDS)
    p_plot.set_defaults(fn=cmd_emit_plots)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
