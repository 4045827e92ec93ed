"""Selection stability (StabPerf) and rank-based AUC."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .selectors import FeatureSubset, Method


@dataclass(frozen=True)
class SelectionRun:
    """The LOOCV subsets of one (method, k) cell."""

    subsets: tuple[FeatureSubset, ...]
    method: Method
    k: int

    def __post_init__(self):
        object.__setattr__(self, "subsets", tuple(self.subsets))
        if len(self.subsets) < 2:
            raise ValueError("a selection run needs at least 2 subsets")
        for s in self.subsets:
            if s.method != self.method or s.k != self.k:
                raise ValueError("all subsets must share the run's method and k")


@dataclass(frozen=True)
class FoldPrediction:
    sample_index: int
    true_label: int
    score: float


def stabperf(subsets: SelectionRun | Sequence) -> float:
    """Mean selection frequency over the union of selected features.

    With ``m`` subsets and union ``F``, returns
    ``sum(freq(f) / m for f in F) / |F|``; this is 1 exactly when all
    subsets agree and ``1/m`` when they are pairwise disjoint.
    """
    if isinstance(subsets, SelectionRun):
        subsets = subsets.subsets
    sets = [set(s.indices if isinstance(s, FeatureSubset) else s) for s in subsets]
    if not sets:
        raise ValueError("stabperf needs at least one subset")
    if any(not s for s in sets):
        raise ValueError("subsets must be non-empty")
    freq = Counter(f for s in sets for f in s)
    m = len(sets)
    return sum(c / m for c in freq.values()) / len(freq)


def auc(preds: Sequence[FoldPrediction]) -> float:
    """Probability that a positive outscores a negative, ties counting one half.

    Computed from midranks (normalized Mann-Whitney U).
    """
    labels = np.array([p.true_label for p in preds])
    scores = np.array([p.score for p in preds], dtype=np.float64)
    return auc_scores(labels, scores)


def auc_scores(labels, scores) -> float:
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    pos = labels > 0
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
