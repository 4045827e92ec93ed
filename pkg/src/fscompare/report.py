"""Run outputs: long-format CSVs, the JSON summary and per-figure tidy tables."""

from __future__ import annotations

import csv
import json
import re
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .harness import (AccuracyRow, CellFailure, MethodComparison, ResultTable, StabilityRow,
                      best_classifier)

STABILITY_HEADER = ["condition", "method", "k", "stab"]
ACCURACY_HEADER = ["condition", "method", "classifier", "k", "auc"]
COMPARISON_HEADER = ["condition", "measure", "classifier", "better", "worse",
                     "mean_diff", "p_adj", "significant"]
TUKEY_HEADER = ["dataset", "condition", "measure", "classifier", "better", "relation",
                "worse", "p_adj"]


@dataclass
class RunReport:
    """Everything needed to inspect and re-run one experiment."""

    tool_version: str
    seed: int
    config: dict
    stability: list[StabilityRow]
    accuracy: list[AccuracyRow]
    comparisons: list[MethodComparison]
    failures: list[CellFailure]
    best_classifier: dict[str, str]

    @classmethod
    def build(cls, config: dict, table: ResultTable, comparisons) -> RunReport:
        best = {}
        for cond in sorted({r.condition for r in table.accuracy}):
            try:
                best[cond] = best_classifier(table, cond)
            except ValueError:
                pass
        return cls(__version__, int(config["seed"]), config, list(table.stability),
                   list(table.accuracy), list(comparisons), list(table.failures), best)

    def to_dict(self) -> dict:
        return {
            "tool": "fscompare",
            "tool_version": self.tool_version,
            "seed": self.seed,
            "config": self.config,
            "best_classifier": self.best_classifier,
            "stability": [asdict(r) for r in self.stability],
            "accuracy": [asdict(r) for r in self.accuracy],
            "comparisons": [asdict(r) for r in self.comparisons],
            "failures": [asdict(r) for r in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> RunReport:
        return cls(d["tool_version"], d["seed"], d["config"],
                   [StabilityRow(**r) for r in d["stability"]],
                   [AccuracyRow(**r) for r in d["accuracy"]],
                   [MethodComparison(**r) for r in d["comparisons"]],
                   [CellFailure(**r) for r in d["failures"]],
                   dict(d["best_classifier"]))

    @classmethod
    def from_json(cls, text: str) -> RunReport:
        return cls.from_dict(json.loads(text))


def _num(v):
    return "" if v is None else repr(float(v))


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_outputs(report: RunReport, out_dir, timing: dict | None = None) -> list[Path]:
    """Write stability.csv, accuracy.csv, comparisons.csv and summary.json.

    ``timing`` (seconds per (condition, method)) goes to timing.csv, which
    is the only non-deterministic output.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "stability.csv", out / "accuracy.csv", out / "comparisons.csv",
             out / "summary.json"]
    _write_csv(paths[0], STABILITY_HEADER,
               [[r.condition, r.method, r.k, _num(r.stab)] for r in report.stability])
    _write_csv(paths[1], ACCURACY_HEADER,
               [[r.condition, r.method, r.classifier, r.k, _num(r.auc)] for r in report.accuracy])
    _write_csv(paths[2], COMPARISON_HEADER,
               [[c.condition, c.measure, c.classifier, c.better, c.worse, repr(c.mean_diff),
                 repr(c.p_adj), int(c.significant)] for c in report.comparisons])
    paths[3].write_text(report.to_json(), encoding="utf-8")
    if timing is not None:
        _write_csv(out / "timing.csv", ["condition", "method", "seconds"],
                   [[c, m, f"{s:.3f}"] for (c, m), s in sorted(timing.items())])
    return paths


def read_rows(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _slug(text):
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text).strip("_")


def _pivot(rows, series_of, value_key):
    """{k: {series: value}} -> header and rows sorted by k."""
    grid = defaultdict(dict)
    series = []
    for r in rows:
        s = series_of(r)
        if s not in series:
            series.append(s)
        grid[int(r["k"])][s] = r[value_key]
    header = ["k", *series]
    body = [[k, *(grid[k].get(s, "") for s in series)] for k in sorted(grid)]
    return header, body


def stability_tables(rows):
    """One table per condition: x = k, one column per method."""
    by_cond = defaultdict(list)
    for r in rows:
        by_cond[r["condition"]].append(r)
    return {c: _pivot(rs, lambda r: r["method"], "stab") for c, rs in sorted(by_cond.items())}


def accuracy_tables(rows, best: dict[str, str] | None = None):
    """Per condition: every method/classifier series, plus the best-classifier view when known."""
    by_cond = defaultdict(list)
    for r in rows:
        by_cond[r["condition"]].append(r)
    tables = {}
    for c, rs in sorted(by_cond.items()):
        tables[c] = _pivot(rs, lambda r: f"{r['method']}/{r['classifier']}", "auc")
        if best and c in best:
            chosen = [r for r in rs if r["classifier"] == best[c]]
            tables[f"{c} [best={best[c]}]"] = _pivot(chosen, lambda r: r["method"], "auc")
    return tables


def tukey_table(rows, include_all=False):
    """Comparison rows in the 'A is better than B, p-adj' layout."""
    header = TUKEY_HEADER
    body = []
    for r in rows:
        if not include_all and r["significant"] not in ("1", "True", "true"):
            continue
        dataset, _, condition = r["condition"].partition("/")
        body.append([dataset, condition, r["measure"], r["classifier"], r["better"],
                     "is better than", r["worse"], f"{float(r['p_adj']):.4f}"])
    return header, body


def write_table(path: Path, header, body):
    _write_csv(path, header, body)
    return path


def table_filename(kind, condition):
    return f"{kind}__{_slug(condition)}.csv"
