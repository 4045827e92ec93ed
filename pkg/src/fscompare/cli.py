"""Command-line front end: ``fscompare synth | run | report``.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, config_to_dict, load_config
from .data import DataFormatError, SynthSpec, ValidationError, planted_indices, synthesize, write_csv
from .harness import WORKERS_ENV, compare_methods, run_experiment
from .report import (RunReport, accuracy_tables, read_rows, stability_tables, table_filename,
                     tukey_table, write_outputs, write_table)

log = logging.getLogger("fscompare")

REPORT_SOURCES = {"stability": "stability.csv", "accuracy": "accuracy.csv",
                  "tukey": "comparisons.csv"}


def cmd_synth(args) -> int:
    try:
        spec = SynthSpec(args.m_per_class, args.n, args.planted, args.effect, args.block, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    matrix = synthesize(spec)
    out = Path(args.output)
    write_csv(matrix, out)
    sidecar = out.with_name(out.stem + ".planted.txt")
    sidecar.write_text("".join(f"{j}\n" for j in planted_indices(matrix)), encoding="utf-8")
    print(f"wrote {out} ({matrix.m} samples x {matrix.n} features) and {sidecar}")
    return 0


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.log2:
        cfg = replace(cfg, log2=True)
    try:
        table = run_experiment(cfg, workers=args.workers)
    except (ValueError, OSError, DataFormatError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    comparisons = compare_methods(table, cfg.alpha)
    report = RunReport.build(config_to_dict(cfg), table, comparisons)
    paths = write_outputs(report, args.output, table.timing)
    for p in paths:
        print(f"wrote {p}")
    if table.failures:
        for f in table.failures:
            where = f"condition={f.condition} method={f.method} k={f.k}"
            if f.classifier:
                where += f" classifier={f.classifier}"
            print(f"failed cell: {where}: {f.message}", file=sys.stderr)
        return 1
    return 0


def _load_best(results_dir: Path):
    summary = results_dir / "summary.json"
    if summary.is_file():
        return json.loads(summary.read_text(encoding="utf-8")).get("best_classifier", {})
    return {}


def cmd_report(args) -> int:
    results = Path(args.results)
    source = results / REPORT_SOURCES[args.kind] if results.is_dir() else results
    if not source.is_file():
        print(f"error: results file {source} not found", file=sys.stderr)
        return 1
    try:
        rows = read_rows(source)
    except (OSError, csv.Error) as exc:
        print(f"error: cannot read {source}: {exc}", file=sys.stderr)
        return 1
    if not rows:
        print(f"error: {source} holds no results", file=sys.stderr)
        return 1
    out_dir = Path(args.output) if args.output else source.parent / "tables"
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if args.kind == "tukey":
            tables = {"": tukey_table(rows, include_all=args.all)}
        elif args.kind == "stability":
            tables = stability_tables(rows)
        else:
            tables = accuracy_tables(rows, _load_best(source.parent))
    except KeyError as exc:
        print(f"error: {source} lacks column {exc}", file=sys.stderr)
        return 1
    writer = csv.writer(sys.stdout, lineterminator="\n")
    for name, (header, body) in tables.items():
        path = out_dir / ("tukey.csv" if args.kind == "tukey" else table_filename(args.kind, name))
        write_table(path, header, body)
        if name:
            print(f"# {name}")
        writer.writerow(header)
        writer.writerows(body)
        print(f"# -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fscompare",
        description="Compare filter feature-selection methods by LOOCV stability and AUC.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset with planted biomarkers")
    p.add_argument("--m-per-class", type=int, default=10)
    p.add_argument("--n", type=int, default=1000, help="number of features")
    p.add_argument("--planted", type=int, default=30, help="number of planted biomarkers")
    p.add_argument("--effect", type=float, default=2.0,
                   help="planted mean shift in within-class standard deviations")
    p.add_argument("--block", type=int, default=1, help="size of correlated feature blocks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="CSV file to write")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run the LOOCV comparison described by a config file")
    p.add_argument("config", help="YAML config, or a summary.json from an earlier run")
    p.add_argument("-o", "--output", required=True, help="directory for results")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default: CPU count; {WORKERS_ENV} overrides)")
    p.add_argument("--log2", action="store_true", help="log2-transform the data before selection")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="emit per-condition tables for plotting")
    p.add_argument("results", help="results directory from 'run', or one of its CSV files")
    p.add_argument("kind", choices=sorted(REPORT_SOURCES))
    p.add_argument("-o", "--output", help="directory for the tables (default: <results>/tables)")
    p.add_argument("--all", action="store_true",
                   help="tukey: include non-significant comparisons")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
