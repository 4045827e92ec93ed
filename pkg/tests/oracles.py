"""Independent reference implementations used as test oracles."""

import math
from collections import Counter

import numpy as np


def entropy_bits(seq):
    n = len(seq)
    return -sum(c / n * math.log2(c / n) for c in Counter(seq).values())


def mi_bruteforce(a, b):
    """I(a; b) = H(a) + H(b) - H(a, b) from explicit joint counts."""
    a, b = list(a), list(b)
    return entropy_bits(a) + entropy_bits(b) - entropy_bits(list(zip(a, b)))


def mrmr_greedy_oracle(codes, y, k, tol=1e-12):
    """Greedy MID, recomputing every candidate score from scratch at each step."""
    codes = np.asarray(codes)
    n = codes.shape[1]
    chosen = []
    for _ in range(k):
        best, best_j = -math.inf, None
        for j in range(n):
            if j in chosen:
                continue
            score = mi_bruteforce(codes[:, j], y)
            if chosen:
                score -= sum(mi_bruteforce(codes[:, j], codes[:, s]) for s in chosen) / len(chosen)
            if score > best + tol:
                best, best_j = score, j
        chosen.append(best_j)
    return chosen


def regularized_lda_2d(X, y, gamma):
    """Closed-form shrunk-LDA direction for two features (explicit 2x2 inverse)."""
    X = np.asarray(X, dtype=float)
    pos, neg = X[y > 0], X[y <= 0]
    delta = pos.mean(0) - neg.mean(0)
    cp, cn = pos - pos.mean(0), neg - neg.mean(0)
    s = (cp.T @ cp + cn.T @ cn) / (len(X) - 2)
    shrink = (1 - gamma) * (s[0, 0] + s[1, 1]) / 2
    a, bb, d = gamma * s[0, 0] + shrink, gamma * s[0, 1], gamma * s[1, 1] + shrink
    det = a * d - bb * bb
    b = np.array([d * delta[0] - bb * delta[1], -bb * delta[0] + a * delta[1]]) / det
    b /= math.hypot(*b)
    return b if b @ delta >= 0 else -b


def auc_pairs(labels, scores):
    pos = [s for l, s in zip(labels, scores) if l > 0]
    neg = [s for l, s in zip(labels, scores) if l <= 0]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))
