"""Random forest of fully grown Gini CART trees on bootstrap resamples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._base import TrainConfig, check_training_data


@dataclass(frozen=True, eq=False)
class Forest:
    """Trees stored as padded node arrays, one row per tree.

    Node ``0`` is the root; ``left == -1`` marks a leaf, whose
    ``positive_fraction`` is the share of positive bootstrap samples in it.
    ``inbag[t, i]`` counts how often sample ``i`` was drawn for tree ``t``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    positive_fraction: np.ndarray
    n_nodes: np.ndarray
    inbag: np.ndarray = field(repr=False)
    n_features: int
    mtry: int
    seed: int

    @property
    def n_trees(self) -> int:
        return len(self.n_nodes)

    def votes(self, X) -> np.ndarray:
        """Per-tree votes, shape (n_trees, n_samples): 1 positive, 0 negative, 0.5 tied leaf."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        leaf_p = _leaf_values(self.feature, self.threshold, self.left, self.right,
                              self.positive_fraction, np.ascontiguousarray(X))
        return np.where(leaf_p > 0.5, 1.0, np.where(leaf_p < 0.5, 0.0, 0.5))

    def decision(self, X) -> np.ndarray:
        """Fraction of trees voting for the positive class."""
        return self.votes(X).mean(axis=0)


def tree_seeds(seed: int, n_trees: int) -> np.ndarray:
    """Independent 32-bit seeds, one per tree, derived from ``(seed, tree index)``."""
    return np.array([np.random.SeedSequence([seed, t]).generate_state(1)[0]
                     for t in range(n_trees)], dtype=np.int64)


@njit(cache=True)
def _best_split(X, t, idx, feat):
    # Returns (score, threshold); score is sum over children of pos*neg/size,
    # which ranks splits exactly like weighted Gini impurity. inf = no split.
    s = idx.shape[0]
    vals = np.empty(s)
    for a in range(s):
        vals[a] = X[idx[a], feat]
    order = np.argsort(vals, kind="mergesort")
    total_pos = 0.0
    for a in range(s):
        total_pos += t[idx[a]]
    best = np.inf
    thr = 0.0
    pos_left = 0.0
    for a in range(s - 1):
        pos_left += t[idx[order[a]]]
        v0 = vals[order[a]]
        v1 = vals[order[a + 1]]
        if v1 <= v0:
            continue
        n_left = a + 1.0
        n_right = s - n_left
        pos_right = total_pos - pos_left
        score = (pos_left * (n_left - pos_left) / n_left
                 + pos_right * (n_right - pos_right) / n_right)
        if score < best:
            best = score
            mid = 0.5 * (v0 + v1)
            thr = mid if mid < v1 else v0
    return best, thr


@njit(cache=True)
def _grow_forest(X, t, seeds, mtry):
    m, k = X.shape
    n_trees = seeds.shape[0]
    max_nodes = 2 * m - 1
    feature = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    threshold = np.zeros((n_trees, max_nodes))
    left = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    right = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    value = np.zeros((n_trees, max_nodes))
    n_nodes = np.zeros(n_trees, dtype=np.int64)
    inbag = np.zeros((n_trees, m), dtype=np.int64)

    for tr in range(n_trees):
        np.random.seed(seeds[tr])
        boot = np.random.randint(0, m, m)
        for a in range(m):
            inbag[tr, boot[a]] += 1
        # explicit stack of (node id, sample indices)
        stack_nodes = [0]
        stack_idx = [boot]
        count = 1
        while len(stack_nodes) > 0:
            node = stack_nodes.pop()
            idx = stack_idx.pop()
            s = idx.shape[0]
            pos = 0.0
            for a in range(s):
                pos += t[idx[a]]
            value[tr, node] = pos / s
            if pos == 0.0 or pos == s:
                continue
            perm = np.random.permutation(k)
            best = np.inf
            best_feat = -1
            best_thr = 0.0
            tried = 0
            for c in range(k):
                f = perm[c]
                score, thr = _best_split(X, t, idx, f)
                if score == np.inf:
                    continue  # constant in this node; does not count toward mtry
                if score < best:
                    best = score
                    best_feat = f
                    best_thr = thr
                tried += 1
                if tried >= mtry:
                    break
            if best_feat < 0:
                continue
            n_left = 0
            for a in range(s):
                if X[idx[a], best_feat] <= best_thr:
                    n_left += 1
            li = np.empty(n_left, dtype=np.int64)
            ri = np.empty(s - n_left, dtype=np.int64)
            pl = 0
            pr = 0
            for a in range(s):
                if X[idx[a], best_feat] <= best_thr:
                    li[pl] = idx[a]
                    pl += 1
                else:
                    ri[pr] = idx[a]
                    pr += 1
            feature[tr, node] = best_feat
            threshold[tr, node] = best_thr
            left[tr, node] = count
            right[tr, node] = count + 1
            stack_nodes.append(count)
            stack_idx.append(li)
            stack_nodes.append(count + 1)
            stack_idx.append(ri)
            count += 2
        n_nodes[tr] = count
    return feature, threshold, left, right, value, n_nodes, inbag


@njit(cache=True)
def _leaf_values(feature, threshold, left, right, value, X):
    n_trees = feature.shape[0]
    out = np.empty((n_trees, X.shape[0]))
    for tr in range(n_trees):
        for i in range(X.shape[0]):
            node = 0
            while left[tr, node] >= 0:
                if X[i, feature[tr, node]] <= threshold[tr, node]:
                    node = left[tr, node]
                else:
                    node = right[tr, node]
            out[tr, i] = value[tr, node]
    return out


def train_rf(X, y, cfg: TrainConfig = TrainConfig()) -> Forest:
    """Grow ``cfg.n_trees`` unpruned Gini trees with ``ceil(sqrt(k))`` candidate features per split.

    Tree ``t`` draws its bootstrap sample and feature orders from its own
    stream seeded by ``(cfg.seed, t)``, so the forest is a function of the
    data and the seed alone.
    """
    X, y = check_training_data(X, y)
    k = X.shape[1]
    mtry = max(1, math.ceil(math.sqrt(k)))
    t = (y > 0).astype(np.float64)
    seeds = tree_seeds(cfg.seed, cfg.n_trees)
    arrays = _grow_forest(np.ascontiguousarray(X), t, seeds, mtry)
    feature, threshold, left, right, value, n_nodes, inbag = arrays
    width = int(n_nodes.max())
    return Forest(feature[:, :width].copy(), threshold[:, :width].copy(),
                  left[:, :width].copy(), right[:, :width].copy(),
                  value[:, :width].copy(), n_nodes, inbag, k, mtry, cfg.seed)


def oob_error(forest: Forest, X, y) -> float:
    """Out-of-bag misclassification rate over samples left out by at least one tree."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    votes = forest.votes(X)
    oob = forest.inbag == 0
    errors, counted = 0, 0
    for i in range(len(y)):
        trees = oob[:, i]
        if not trees.any():
            continue
        share = votes[trees, i].mean()
        predicted = 1 if share > 0.5 else -1
        errors += predicted != y[i]
        counted += 1
    return errors / counted if counted else float("nan")
