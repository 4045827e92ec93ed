"""Filter feature selectors: SAM, mRMR and GeoDE (characteristic direction).

SAM and GeoDE produce one score per feature and are turned into subsets by
:func:`select_top_k`; mRMR builds its subset greedily. Every selector is a
pure function of the training view it is given.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data import BinaryView

# Scores closer than this are treated as tied; ties go to the lowest index.
TIE_TOL = 1e-12


class Method(str, enum.Enum):
    SAM = "SAM"
    MRMR = "MRMR"
    GEODE = "GEODE"


@dataclass(frozen=True)
class SelectorConfig:
    """Knobs of the three selectors.

    ``sam_s0`` is either ``"median"`` (median of the per-feature standard
    errors) or a fixed non-negative number. ``mrmr_threshold`` places the
    three mRMR bins at mean +/- threshold * std.
    """

    sam_s0: str | float = "median"
    mrmr_threshold: float = 1.0
    geode_gamma: float = 0.95
    geode_rank_tol: float = 1e-10

    def __post_init__(self):
        if isinstance(self.sam_s0, str):
            if self.sam_s0 != "median":
                raise ValueError(f"unknown s0 rule {self.sam_s0!r}")
        elif not self.sam_s0 >= 0:
            raise ValueError("sam_s0 must be non-negative")
        if not self.mrmr_threshold > 0:
            raise ValueError("mrmr_threshold must be positive")
        if not 0 <= self.geode_gamma <= 1:
            raise ValueError("geode_gamma must lie in [0, 1]")


@dataclass(frozen=True)
class FeatureScores:
    values: np.ndarray
    method: Method


@dataclass(frozen=True)
class FeatureSubset:
    """Ordered, duplicate-free feature indices (rank or selection order)."""

    indices: tuple[int, ...]
    method: Method

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("subset indices must be distinct")

    @property
    def k(self) -> int:
        return len(self.indices)

    def head(self, k: int) -> FeatureSubset:
        if k > self.k:
            raise ValueError(f"cannot take {k} features from a subset of {self.k}")
        return FeatureSubset(self.indices[:k], self.method)


def _check_k(k, n):
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, n={n}]")


def select_top_k(scores: FeatureScores, k: int) -> FeatureSubset:
    """Indices of the ``k`` largest scores, descending, ties by lowest index."""
    values = np.asarray(scores.values)
    _check_k(k, len(values))
    order = np.lexsort((np.arange(len(values)), -values))
    return FeatureSubset(order[:k], scores.method)


# --------------------------------------------------------------------- SAM

def sam_statistic(X, y, s0="median"):
    """Signed SAM relative difference d_i for every column of ``X``.

    ``y`` holds +1/-1 labels. Returns ``(d, s, s0)``.
    """
    X = np.asarray(X, dtype=np.float64)
    pos, neg = X[y > 0], X[y <= 0]
    n1, n2 = len(pos), len(neg)
    if n1 < 2 or n2 < 2:
        raise ValueError("SAM needs at least 2 samples per class")
    diff = pos.mean(axis=0) - neg.mean(axis=0)
    ss = ((pos - pos.mean(axis=0)) ** 2).sum(axis=0) + ((neg - neg.mean(axis=0)) ** 2).sum(axis=0)
    s = np.sqrt((1.0 / n1 + 1.0 / n2) * ss / (n1 + n2 - 2))
    s0 = float(np.median(s)) if s0 == "median" else float(s0)
    denom = s + s0
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(denom > 0, diff / np.where(denom > 0, denom, 1.0), 0.0)
    return d, s, s0


def sam_scores(view: BinaryView, config: SelectorConfig = SelectorConfig()) -> FeatureScores:
    d, _, _ = sam_statistic(view.X, view.y, config.sam_s0)
    return FeatureScores(np.abs(d), Method.SAM)


# -------------------------------------------------------------------- mRMR

def mutual_information(a, b) -> float:
    """Plug-in mutual information (bits) of two discrete sequences."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"sequences must be 1-d of equal length, got {a.shape} and {b.shape}")
    if len(a) == 0:
        raise ValueError("sequences must be non-empty")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    return float(_mi_from_counts(joint[None])[0])


def _mi_from_counts(joint):
    """MI in bits for a stack of contingency tables of shape (t, ra, rb)."""
    total = joint.sum(axis=(1, 2), keepdims=True)
    p = joint / total
    pa = p.sum(axis=2, keepdims=True)
    pb = p.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p / (pa * pb)), 0.0)
    return terms.sum(axis=(1, 2))


def discretize(X, threshold=1.0):
    """Per-column three-level coding: 0 below mean - t*std, 2 above mean + t*std, else 1."""
    X = np.asarray(X, dtype=np.float64)
    mu = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1) if len(X) > 1 else np.zeros(X.shape[1])
    codes = np.ones(X.shape, dtype=np.int64)
    codes[X < mu - threshold * sd] = 0
    codes[X > mu + threshold * sd] = 2
    return codes


def mi_columns(codes, target):
    """MI between every column of ``codes`` and the vector ``target`` (both small non-negative ints)."""
    codes = np.asarray(codes)
    target = np.asarray(target)
    ra = int(codes.max()) + 1
    rb = int(target.max()) + 1
    joint = np.empty((codes.shape[1], ra, rb))
    for v in range(rb):
        hit = (target == v).astype(np.float64)
        for u in range(ra):
            joint[:, u, v] = (codes == u).T.astype(np.float64) @ hit
    return _mi_from_counts(joint)


def mrmr_rank(codes, y_codes, k):
    """Greedy MID selection on already-discretized data.

    Returns ``(order, gains)`` where ``gains[t]`` is the criterion value of
    the feature picked at step ``t``.
    """
    codes = np.asarray(codes)
    n = codes.shape[1]
    _check_k(k, n)
    relevance = mi_columns(codes, y_codes)
    redundancy = np.zeros(n)
    available = np.ones(n, dtype=bool)
    order, gains = [], []
    for step in range(k):
        score = relevance if step == 0 else relevance - redundancy / step
        score = np.where(available, score, -np.inf)
        best = score.max()
        j = int(np.flatnonzero(score >= best - TIE_TOL)[0])
        order.append(j)
        gains.append(float(best))
        available[j] = False
        if step + 1 < k:
            redundancy += mi_columns(codes, codes[:, j])
    return order, gains


def mrmr_select(view: BinaryView, k: int, config: SelectorConfig = SelectorConfig()) -> FeatureSubset:
    """Minimum-redundancy maximum-relevance subset of size ``k`` (MID criterion).

    Features are discretized on the view's own samples; class labels are
    coded 0/1. The returned order is the greedy selection order.
    """
    _check_k(k, view.n)
    codes = discretize(view.X, config.mrmr_threshold)
    order, _ = mrmr_rank(codes, (view.y > 0).astype(np.int64), k)
    return FeatureSubset(order, Method.MRMR)


# ------------------------------------------------------------------- GeoDE

def characteristic_direction(X, y, gamma=0.95, rank_tol=1e-10):
    """Unit-norm characteristic direction separating the +1 and -1 rows of ``X``.

    The data are projected onto their leading principal components, a
    shrunk pooled within-class covariance is inverted there, and the class
    mean difference is mapped back to feature space. The sign is chosen so
    that the mean difference has a non-negative projection.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    m = len(X)
    if m < 3:
        raise ValueError("characteristic direction needs at least 3 samples")
    pos, neg = y > 0, y <= 0
    if pos.sum() < 1 or neg.sum() < 1:
        raise ValueError("both classes must be present")
    delta = X[pos].mean(axis=0) - X[neg].mean(axis=0)

    centered = X - X.mean(axis=0)
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        raise ValueError("data have no variance")
    rank = int(np.sum(sv > rank_tol * sv[0]))
    r = max(1, min(m - 1, rank))
    basis = vt[:r].T
    scores = centered @ basis
    within = np.empty_like(scores)
    within[pos] = scores[pos] - scores[pos].mean(axis=0)
    within[neg] = scores[neg] - scores[neg].mean(axis=0)
    cov = within.T @ within / max(m - 2, 1)
    sigma = np.trace(cov) / r
    if sigma <= 0:
        sigma = np.trace(scores.T @ scores) / (r * max(m - 1, 1))
    shrunk = gamma * cov + (1.0 - gamma) * sigma * np.eye(r)
    b = basis @ np.linalg.solve(shrunk, basis.T @ delta)
    norm = np.linalg.norm(b)
    if norm == 0:
        raise ValueError("class means coincide; direction undefined")
    b /= norm
    if delta @ b < 0:
        b = -b
    return b


def geode_scores(view: BinaryView, config: SelectorConfig = SelectorConfig()) -> FeatureScores:
    b = characteristic_direction(view.X, view.y, config.geode_gamma, config.geode_rank_tol)
    return FeatureScores(np.abs(b), Method.GEODE)


def rank_features(view: BinaryView, method, k: int,
                  config: SelectorConfig = SelectorConfig()) -> FeatureSubset:
    """Run ``method`` on ``view`` and return its top-``k`` subset."""
    method = Method(method)
    if method is Method.MRMR:
        return mrmr_select(view, k, config)
    scorer = sam_scores if method is Method.SAM else geode_scores
    return select_top_k(scorer(view, config), k)
