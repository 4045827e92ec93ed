"""Experiment config files: flat YAML keys and lists.

Example::

    datasets: [mehg.csv]
    conditions: ["control:low", "control:high"]   # negative:positive
    methods: [SAM, MRMR, GEODE]
    classifiers: [RF, SVM, RIDGE, LASSO]
    k_grid: [12, 24, 40, 80, 120, 160, 200, 240, 280, 320, 360, 400]
    seed: 0

With several datasets, conditions take the form ``dataset:negative:positive``
where ``dataset`` is the file stem. Relative paths are resolved against the
config file's directory. A JSON run summary is also accepted; its
``config`` entry is used.
"""

from __future__ import annotations

import json
from pathlib import Path

import yaml

from .classifiers import Classifier, TrainConfig
from .harness import DEFAULT_K_GRID, Condition, ExperimentConfig
from .selectors import Method, SelectorConfig


class ConfigError(ValueError):
    pass


KNOWN_KEYS = {
    "datasets", "dataset", "conditions", "methods", "classifiers", "k_grid", "seed", "alpha",
    "log2", "ridge_lambda", "lasso_lambda", "svm_c", "n_trees", "max_iter", "tol",
    "sam_s0", "mrmr_threshold", "geode_gamma", "geode_rank_tol",
}


def _parse_conditions(entries, names):
    conditions = []
    for entry in entries:
        parts = str(entry).split(":")
        if len(parts) == 2:
            if len(names) != 1:
                raise ConfigError(
                    f"condition {entry!r} must name its dataset when several are configured")
            conditions.append(Condition(names[0], parts[0], parts[1]))
        elif len(parts) == 3:
            if parts[0] not in names:
                raise ConfigError(f"condition {entry!r} names unknown dataset {parts[0]!r}")
            conditions.append(Condition(*parts))
        else:
            raise ConfigError(f"condition {entry!r} must be 'negative:positive' "
                              f"or 'dataset:negative:positive'")
    return tuple(conditions)


def config_from_dict(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of keys to values")
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    paths = raw.get("datasets", raw.get("dataset"))
    if paths is None:
        raise ConfigError("config needs 'datasets' (or 'dataset')")
    if isinstance(paths, str):
        paths = [paths]
    resolved = []
    for p in paths:
        path = Path(p)
        resolved.append(path if path.is_absolute() else (base_dir / path).resolve())
    names = [p.stem for p in resolved]
    if len(set(names)) != len(names):
        raise ConfigError("dataset file stems must be unique")
    if "conditions" not in raw:
        raise ConfigError("config needs 'conditions'")
    try:
        train = TrainConfig(
            lam=float(raw.get("ridge_lambda", 1.0)),
            lasso_lam=float(raw.get("lasso_lambda", TrainConfig.lasso_lam)),
            c=float(raw.get("svm_c", 1.0)),
            n_trees=int(raw.get("n_trees", 500)),
            max_iter=int(raw.get("max_iter", 10_000)),
            tol=float(raw.get("tol", 1e-6)),
        )
        s0 = raw.get("sam_s0", "median")
        selector = SelectorConfig(
            sam_s0=s0 if s0 == "median" else float(s0),
            mrmr_threshold=float(raw.get("mrmr_threshold", 1.0)),
            geode_gamma=float(raw.get("geode_gamma", 0.95)),
            geode_rank_tol=float(raw.get("geode_rank_tol", 1e-10)),
        )
        return ExperimentConfig(
            datasets=tuple((n, str(p)) for n, p in zip(names, resolved)),
            conditions=_parse_conditions(raw["conditions"], names),
            methods=tuple(Method(str(m).upper()) for m in raw.get("methods", [m.value for m in Method])),
            k_grid=tuple(raw.get("k_grid", DEFAULT_K_GRID)),
            classifiers=tuple(Classifier(str(c).upper())
                              for c in raw.get("classifiers", [c.value for c in Classifier])),
            train=train,
            selector=selector,
            seed=int(raw.get("seed", 0)),
            alpha=float(raw.get("alpha", 0.05)),
            log2=bool(raw.get("log2", False)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            raw = json.loads(text)
            if isinstance(raw, dict) and "config" in raw:
                raw = raw["config"]
        else:
            raw = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_dict(raw, path.parent)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Fully resolved echo of ``cfg``; feeding it back yields an equal config."""
    return {
        "datasets": [p for _, p in cfg.datasets],
        "conditions": [f"{c.dataset}:{c.negative}:{c.positive}" for c in cfg.conditions],
        "methods": [m.value for m in cfg.methods],
        "classifiers": [c.value for c in cfg.classifiers],
        "k_grid": list(cfg.k_grid),
        "seed": cfg.seed,
        "alpha": cfg.alpha,
        "log2": cfg.log2,
        "ridge_lambda": cfg.train.lam,
        "lasso_lambda": cfg.train.lasso_lam,
        "svm_c": cfg.train.c,
        "n_trees": cfg.train.n_trees,
        "max_iter": cfg.train.max_iter,
        "tol": cfg.train.tol,
        "sam_s0": cfg.selector.sam_s0,
        "mrmr_threshold": cfg.selector.mrmr_threshold,
        "geode_gamma": cfg.selector.geode_gamma,
        "geode_rank_tol": cfg.selector.geode_rank_tol,
    }
