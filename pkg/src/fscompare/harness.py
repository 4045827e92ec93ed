"""Leave-one-out comparison engine.

For every (condition, method) the engine runs one job per held-out sample.
A job ranks features on the remaining samples once, at the largest k of
the grid, and takes prefixes for the smaller ones; this is exact because
top-k rankings and greedy mRMR are both prefix-consistent.
"""

from __future__ import annotations

import hashlib
import logging
import os
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import classifiers as clf
from .classifiers import Classifier, TrainConfig
from .data import BinaryView, ExpressionMatrix, ValidationError, binary_view, load_csv
from .metrics import FoldPrediction, SelectionRun, auc, stabperf
from .selectors import FeatureSubset, Method, SelectorConfig, rank_features
from .stats import GroupSamples, tukey_hsd

log = logging.getLogger(__name__)

WORKERS_ENV = "FSCOMPARE_WORKERS"
DEFAULT_K_GRID = (12, 24, *range(40, 401, 40))


class FoldError(RuntimeError):
    """A single LOOCV fold could not be run."""


@dataclass(frozen=True)
class Condition:
    """One two-class comparison: ``positive`` (treated) against ``negative`` (control)."""

    dataset: str
    negative: str
    positive: str

    @property
    def id(self) -> str:
        return f"{self.dataset}/{self.positive}_vs_{self.negative}"


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[tuple[str, str], ...]
    conditions: tuple[Condition, ...]
    methods: tuple[Method, ...] = tuple(Method)
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    classifiers: tuple[Classifier, ...] = tuple(Classifier)
    train: TrainConfig = TrainConfig()
    selector: SelectorConfig = SelectorConfig()
    seed: int = 0
    alpha: float = 0.05
    log2: bool = False

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple((str(n), str(p)) for n, p in self.datasets))
        object.__setattr__(self, "conditions", tuple(self.conditions))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        object.__setattr__(self, "classifiers", tuple(Classifier(c) for c in self.classifiers))
        object.__setattr__(self, "k_grid", tuple(int(k) for k in self.k_grid))
        if not self.methods or not self.classifiers:
            raise ValueError("methods and classifiers must be non-empty")
        if not self.k_grid or min(self.k_grid) < 1:
            raise ValueError("k_grid must hold positive counts")
        if len(set(self.k_grid)) != len(self.k_grid):
            raise ValueError("k_grid values must be distinct")
        if not self.conditions:
            raise ValueError("at least one condition is required")
        names = {n for n, _ in self.datasets}
        for cond in self.conditions:
            if cond.dataset not in names:
                raise ValueError(f"condition {cond.id} refers to unknown dataset {cond.dataset!r}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class StabilityRow:
    condition: str
    method: str
    k: int
    stab: float | None


@dataclass(frozen=True)
class AccuracyRow:
    condition: str
    method: str
    classifier: str
    k: int
    auc: float | None


@dataclass(frozen=True)
class CellFailure:
    condition: str
    method: str
    k: int
    classifier: str
    message: str


@dataclass
class ResultTable:
    """Stab and AUC matrices in long format, plus failed cells.

    ``selections`` keeps the LOOCV subsets per (condition, method, k) for
    in-process analysis; it is not serialized.
    """

    stability: list[StabilityRow]
    accuracy: list[AccuracyRow]
    failures: list[CellFailure] = field(default_factory=list)
    timing: dict[tuple[str, str], float] = field(default_factory=dict)
    selections: dict[tuple[str, str, int], SelectionRun] = field(default_factory=dict, repr=False)

    def stab(self, condition, method, k):
        for row in self.stability:
            if (row.condition, row.method, row.k) == (condition, str(method), k):
                return row.stab
        raise KeyError((condition, method, k))

    def auc(self, condition, method, classifier, k):
        for row in self.accuracy:
            key = (row.condition, row.method, row.classifier, row.k)
            if key == (condition, str(method), str(classifier), k):
                return row.auc
        raise KeyError((condition, method, classifier, k))


def _s(enum_or_str):
    return getattr(enum_or_str, "value", enum_or_str)


def fold_seed(seed: int, condition: str, method, k: int, fold: int) -> int:
    """Stable 64-bit seed for one (condition, method, k, fold) cell."""
    key = f"{seed}|{condition}|{_s(method)}|{k}|{fold}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def training_view(view: BinaryView, fold: int) -> BinaryView:
    """Training samples of ``fold``; raises :class:`FoldError` if a class is too small."""
    try:
        return view.without(fold)
    except ValidationError as exc:
        raise FoldError(f"fold {fold}: {exc}") from exc


def fit_fold(view: BinaryView, method, k: int, classifiers, train_cfg=TrainConfig(),
             selector_cfg=SelectorConfig(), seed=0, condition="", fold=0):
    """Select and train on every sample but ``fold``.

    Returns ``(subset, {classifier: model})``. Nothing here reads the
    held-out row.
    """
    train = training_view(view, fold)
    subset = rank_features(train, method, k, selector_cfg)
    X = train.X[:, list(subset.indices)]
    cfg = _with_seed(train_cfg, fold_seed(seed, condition, method, k, fold))
    models = {Classifier(c): clf.train(c, X, train.y, cfg) for c in classifiers}
    return subset, models


def _with_seed(cfg: TrainConfig, seed: int) -> TrainConfig:
    return replace(cfg, seed=seed)


@dataclass
class _FoldOutcome:
    condition: str
    method: str
    fold: int
    subsets: dict[int, FeatureSubset] = field(default_factory=dict)
    scores: dict[tuple[int, str], float] = field(default_factory=dict)
    errors: dict[tuple[int, str], str] = field(default_factory=dict)
    selection_error: str | None = None
    seconds: float = 0.0


def _run_fold(view: BinaryView, condition: str, method, ks, classifiers, train_cfg,
              selector_cfg, seed, fold) -> _FoldOutcome:
    start = time.perf_counter()
    out = _FoldOutcome(condition, _s(method), fold)
    try:
        train = training_view(view, fold)
        ranking = rank_features(train, method, max(ks), selector_cfg)
    except (FoldError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        out.selection_error = f"fold {fold}: {exc}"
        out.seconds = time.perf_counter() - start
        return out
    x_test = view.X[fold]
    for k in ks:
        subset = ranking.head(k)
        out.subsets[k] = subset
        cols = list(subset.indices)
        X = train.X[:, cols]
        cfg = _with_seed(train_cfg, fold_seed(seed, condition, method, k, fold))
        for c in classifiers:
            name = _s(c)
            try:
                model = clf.train(c, X, train.y, cfg)
                out.scores[(k, name)] = clf.decision_score(model, x_test[cols])
            except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
                out.errors[(k, name)] = f"fold {fold}: {exc}"
    out.seconds = time.perf_counter() - start
    return out


def _fold_job(args):
    return _run_fold(*args)


def loocv_run(view: BinaryView, method, k: int, classifiers, train_cfg=TrainConfig(),
              selector_cfg=SelectorConfig(), seed=0, condition=""):
    """Leave-one-out selection, training and prediction for one (method, k).

    Returns ``(SelectionRun, {classifier: [FoldPrediction, ...]})`` with one
    subset and one prediction per classifier for each of the ``m`` samples.
    Any fold failure raises :class:`FoldError`.
    """
    if not 1 <= k <= view.n:
        raise ValueError(f"k={k} must lie in [1, n={view.n}]")
    y = view.y
    subsets = []
    preds = {Classifier(c): [] for c in classifiers}
    for fold in range(view.m):
        out = _run_fold(view, condition, method, (k,), classifiers, train_cfg,
                        selector_cfg, seed, fold)
        if out.selection_error:
            raise FoldError(out.selection_error)
        if out.errors:
            (kk, name), msg = next(iter(out.errors.items()))
            raise FoldError(f"{name}: {msg}")
        subsets.append(out.subsets[k])
        for c in preds:
            preds[c].append(FoldPrediction(int(view.sample_indices[fold]), int(y[fold]),
                                           out.scores[(k, c.value)]))
    return SelectionRun(tuple(subsets), Method(method), k), preds


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    if requested:
        return max(1, int(requested))
    return os.cpu_count() or 1


def load_views(cfg: ExperimentConfig, matrices: dict[str, ExpressionMatrix] | None = None):
    """Build the BinaryView of every condition; datasets come from disk unless given."""
    matrices = dict(matrices or {})
    for name, path in cfg.datasets:
        if name not in matrices:
            matrices[name] = load_csv(Path(path))
    if cfg.log2:
        matrices = {name: mat.log2() for name, mat in matrices.items()}
    views = {}
    for cond in cfg.conditions:
        mat = matrices[cond.dataset]
        too_big = [k for k in cfg.k_grid if k > mat.n]
        if too_big:
            raise ValueError(f"k={too_big[0]} exceeds the {mat.n} features of dataset {cond.dataset!r}")
        views[cond.id] = binary_view(mat, cond.negative, cond.positive)
    return views


def run_experiment(cfg: ExperimentConfig, matrices: dict[str, ExpressionMatrix] | None = None,
                   workers: int | None = None) -> ResultTable:
    """Fill the stability and accuracy tables for every condition x method x k."""
    views = load_views(cfg, matrices)
    ks = tuple(sorted(cfg.k_grid))
    jobs = []
    for cond in cfg.conditions:
        view = views[cond.id]
        for method in cfg.methods:
            for fold in range(view.m):
                jobs.append((view, cond.id, method, ks, cfg.classifiers, cfg.train,
                             cfg.selector, cfg.seed, fold))
    n_workers = min(worker_count(workers), max(len(jobs), 1))
    log.info("running %d fold jobs on %d worker(s)", len(jobs), n_workers)
    if n_workers > 1:
        with ProcessPoolExecutor(n_workers) as pool:
            outcomes = list(pool.map(_fold_job, jobs, chunksize=max(1, len(jobs) // (4 * n_workers))))
    else:
        outcomes = [_fold_job(job) for job in jobs]
    return _collect(cfg, views, ks, outcomes)


def _collect(cfg, views, ks, outcomes) -> ResultTable:
    by_cell = defaultdict(list)
    timing = defaultdict(float)
    for out in outcomes:
        by_cell[(out.condition, out.method)].append(out)
        timing[(out.condition, out.method)] += out.seconds
    table = ResultTable([], [], timing=dict(sorted(timing.items())))
    classifier_names = [c.value for c in cfg.classifiers]
    for cond in cfg.conditions:
        view = views[cond.id]
        y = view.y
        for method in cfg.methods:
            folds = sorted(by_cell[(cond.id, method.value)], key=lambda o: o.fold)
            sel_errors = [o.selection_error for o in folds if o.selection_error]
            for k in ks:
                if sel_errors:
                    table.stability.append(StabilityRow(cond.id, method.value, k, None))
                    table.failures.append(CellFailure(cond.id, method.value, k, "", sel_errors[0]))
                    for name in classifier_names:
                        table.accuracy.append(AccuracyRow(cond.id, method.value, name, k, None))
                    continue
                run = SelectionRun(tuple(o.subsets[k] for o in folds), method, k)
                table.selections[(cond.id, method.value, k)] = run
                table.stability.append(StabilityRow(cond.id, method.value, k, stabperf(run)))
                for name in classifier_names:
                    errs = [o.errors[(k, name)] for o in folds if (k, name) in o.errors]
                    if errs:
                        table.accuracy.append(AccuracyRow(cond.id, method.value, name, k, None))
                        table.failures.append(CellFailure(cond.id, method.value, k, name, errs[0]))
                        continue
                    preds = [FoldPrediction(int(view.sample_indices[o.fold]), int(y[o.fold]),
                                            o.scores[(k, name)]) for o in folds]
                    table.accuracy.append(AccuracyRow(cond.id, method.value, name, k, auc(preds)))
    table.stability.sort(key=lambda r: (r.condition, r.method, r.k))
    table.accuracy.sort(key=lambda r: (r.condition, r.method, r.classifier, r.k))
    return table


# ---------------------------------------------------------------- comparisons

@dataclass(frozen=True)
class MethodComparison:
    """One Tukey HSD pair, oriented so that ``better`` has the higher mean."""

    condition: str
    measure: str
    classifier: str
    better: str
    worse: str
    mean_diff: float
    p_adj: float
    significant: bool


def _family(condition, measure, classifier, groups, alpha):
    groups = {name: np.array(vals) for name, vals in groups.items() if len(vals) >= 2}
    if len(groups) < 2:
        return []
    gs = GroupSamples.from_mapping(groups)
    try:
        records = tukey_hsd(gs, alpha)
        pairs = [(r.group_a, r.group_b, r.mean_diff, r.p_adj) for r in records]
    except ValueError:
        # every group constant: differences are either exactly zero or infinitely significant
        means = {name: float(v.mean()) for name, v in groups.items()}
        names = list(groups)
        pairs = [(a, b, means[a] - means[b], 1.0 if means[a] == means[b] else 0.0)
                 for i, a in enumerate(names) for b in names[i + 1:]]
    out = []
    for a, b, diff, p in pairs:
        better, worse = (a, b) if diff >= 0 else (b, a)
        out.append(MethodComparison(condition, measure, classifier, better, worse,
                                    abs(diff), p, p < alpha))
    return out


def compare_methods(table: ResultTable, alpha: float = 0.05) -> list[MethodComparison]:
    """Tukey HSD across methods, with the per-k values of each method as one group.

    One family per condition for stability and one per (condition,
    classifier) for accuracy. Missing cells are dropped from their group.
    """
    stab = defaultdict(lambda: defaultdict(list))
    for row in table.stability:
        if row.stab is not None:
            stab[row.condition][row.method].append(row.stab)
    acc = defaultdict(lambda: defaultdict(list))
    for row in table.accuracy:
        if row.auc is not None:
            acc[(row.condition, row.classifier)][row.method].append(row.auc)
    records = []
    for condition in sorted(stab):
        records += _family(condition, "stability", "", stab[condition], alpha)
    for condition, classifier in sorted(acc):
        records += _family(condition, "accuracy", classifier, acc[(condition, classifier)], alpha)
    return records


def best_classifier(table: ResultTable, condition: str) -> str:
    """Classifier with the highest mean AUC over all methods and k for ``condition``."""
    sums = defaultdict(list)
    for row in table.accuracy:
        if row.condition == condition and row.auc is not None:
            sums[row.classifier].append(row.auc)
    if not sums:
        raise ValueError(f"no accuracy values for condition {condition!r}")
    order = list(dict.fromkeys(r.classifier for r in table.accuracy if r.condition == condition))
    return max(order, key=lambda c: (np.mean(sums[c]) if sums[c] else -np.inf, -order.index(c)))
