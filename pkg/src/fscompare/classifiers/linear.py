"""Penalized logistic regression (ridge, lasso) and a linear soft-margin SVM.

All three standardize their inputs with training statistics and keep the
intercept unpenalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import expit

from ._base import Classifier, ConvergenceError, Scaler, TrainConfig, check_training_data


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Linear decision function ``w . (x - mean) / std + b``.

    ``objective_trace`` holds the objective after every accepted iteration
    (for the SVM this is the negated dual).
    """

    weights: np.ndarray
    intercept: float
    scaler: Scaler
    kind: Classifier
    objective_trace: tuple[float, ...] = field(default=(), repr=False)
    n_iter: int = 0
    dual_coef: np.ndarray | None = field(default=None, repr=False)

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.weights):
            raise ValueError(f"expected {len(self.weights)} features, got {X.shape[1]}")
        return self.scaler.transform(X) @ self.weights + self.intercept


def _logistic_objective(A, y, theta, lam):
    f = A @ theta
    return np.mean(np.logaddexp(0.0, -y * f)) + lam * theta[1:] @ theta[1:]


def logistic_loss_gradient(Z, y, w, b):
    """Gradient of the mean logistic loss in the standardized space, as ``(g_w, g_b)``."""
    s = expit(-y * (Z @ w + b))
    r = -y * s / len(y)
    return Z.T @ r, r.sum()


def _prior_logit(y):
    n_pos = np.sum(y > 0)
    return float(np.log(n_pos / (len(y) - n_pos)))


def train_ridge(X, y, cfg: TrainConfig = TrainConfig()) -> LinearModel:
    """L2-penalized logistic regression by damped Newton iterations.

    Minimizes ``mean(log(1 + exp(-y (w.x + b)))) + lam * ||w||^2`` until the
    gradient 2-norm is at most ``cfg.tol``.
    """
    X, y = check_training_data(X, y)
    scaler = Scaler.fit(X)
    active = ~scaler.constant
    Z = scaler.transform(X)[:, active]
    m, k = Z.shape
    A = np.hstack([np.ones((m, 1)), Z])
    pen = np.r_[0.0, np.full(k, 2.0 * cfg.lam)]
    theta = np.zeros(k + 1)
    theta[0] = _prior_logit(y)
    obj = _logistic_objective(A, y, theta, cfg.lam)
    trace = [obj]
    for it in range(cfg.max_iter):
        f = A @ theta
        s = expit(-y * f)
        grad = -(A.T @ (y * s)) / m + pen * theta
        gnorm = np.linalg.norm(grad)
        if gnorm <= cfg.tol:
            break
        d = s * (1.0 - s) / m
        H = (A.T * d) @ A
        H[np.diag_indices_from(H)] += pen
        step = np.linalg.solve(H, grad)
        slope = grad @ step
        t = 1.0
        while True:
            cand = theta - t * step
            cand_obj = _logistic_objective(A, y, cand, cfg.lam)
            if cand_obj <= obj - 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-12:
                raise ConvergenceError(
                    f"ridge line search stalled at gradient norm {gnorm:.3e}", gnorm)
        theta, obj = cand, cand_obj
        trace.append(obj)
    else:
        raise ConvergenceError(
            f"ridge did not converge in {cfg.max_iter} iterations "
            f"(gradient norm {gnorm:.3e})", gnorm)
    w = np.zeros(X.shape[1])
    w[active] = theta[1:]
    return LinearModel(w, float(theta[0]), scaler, Classifier.RIDGE, tuple(trace), it)


@njit(cache=True)
def _weighted_lasso_cd(Z, z, h, w, b, lam, tol, max_sweeps):
    # Minimizes 0.5 * sum(h * (z - b - Z w)^2) + lam * ||w||_1 in place.
    m, k = Z.shape
    r = z - b - Z @ w
    colnorm = np.zeros(k)
    for j in range(k):
        for i in range(m):
            colnorm[j] += h[i] * Z[i, j] * Z[i, j]
    hsum = h.sum()
    for sweep in range(max_sweeps):
        maxdelta = 0.0
        db = 0.0
        for i in range(m):
            db += h[i] * r[i]
        db /= hsum
        b += db
        for i in range(m):
            r[i] -= db
        maxdelta = abs(db)
        for j in range(k):
            if colnorm[j] == 0.0:
                continue
            rho = colnorm[j] * w[j]
            for i in range(m):
                rho += h[i] * Z[i, j] * r[i]
            if rho > lam:
                new = (rho - lam) / colnorm[j]
            elif rho < -lam:
                new = (rho + lam) / colnorm[j]
            else:
                new = 0.0
            delta = new - w[j]
            if delta != 0.0:
                for i in range(m):
                    r[i] -= delta * Z[i, j]
                w[j] = new
                if abs(delta) > maxdelta:
                    maxdelta = abs(delta)
        if maxdelta <= tol:
            return b, sweep + 1, True
    return b, max_sweeps, False


_CURVATURE_FLOOR = 1e-4
_INNER_SWEEPS = 1000


def _lasso_objective(Z, y, w, b, lam):
    return np.mean(np.logaddexp(0.0, -y * (Z @ w + b))) + lam * np.abs(w).sum()


def lasso_lambda_max(X, y) -> float:
    """Smallest lasso penalty at which every weight is exactly zero."""
    X, y = check_training_data(X, y)
    scaler = Scaler.fit(X)
    Z = scaler.transform(X)[:, ~scaler.constant]
    if Z.shape[1] == 0:
        return 0.0
    p = np.mean(y > 0)
    t = (y > 0).astype(np.float64)
    return float(np.max(np.abs(Z.T @ (p - t))) / len(y))


def train_lasso(X, y, cfg: TrainConfig = TrainConfig()) -> LinearModel:
    """L1-penalized logistic regression (penalty ``cfg.lasso_lam``).

    Each outer step fits the quadratic approximation of the loss by cyclic
    coordinate descent with soft-thresholding, then backtracks along the
    proposed move until the true objective does not increase. Converged
    when the largest coordinate change is at most ``cfg.tol``.
    """
    X, y = check_training_data(X, y)
    lam = cfg.lasso_lam
    scaler = Scaler.fit(X)
    active = ~scaler.constant
    Z = np.ascontiguousarray(scaler.transform(X)[:, active])
    m, k = Z.shape
    t01 = (y > 0).astype(np.float64)
    w = np.zeros(k)
    b = _prior_logit(y)
    obj = _lasso_objective(Z, y, w, b, lam)
    trace = [obj]
    for it in range(cfg.max_iter):
        f = Z @ w + b
        p = expit(f)
        curv = np.maximum(p * (1.0 - p), _CURVATURE_FLOOR)
        z = f + (t01 - p) / curv
        w_new = w.copy()
        # An inexact inner solve still lowers the quadratic model, so the
        # proposal remains a descent direction for the line search below.
        b_new, _, _ = _weighted_lasso_cd(Z, z, curv / m, w_new, b, lam, cfg.tol, _INNER_SWEEPS)
        dw, db = w_new - w, b_new - b
        t = 1.0
        while True:
            cand_obj = _lasso_objective(Z, y, w + t * dw, b + t * db, lam)
            if cand_obj <= obj:
                break
            t *= 0.5
            if t < 1e-10:
                t = 0.0
                break
        change = t * max(np.max(np.abs(dw), initial=0.0), abs(db))
        if t > 0:
            w, b, obj = w + t * dw, b + t * db, cand_obj
            trace.append(obj)
        if change <= cfg.tol:
            break
    else:
        raise ConvergenceError(
            f"lasso did not converge in {cfg.max_iter} iterations (last change {change:.3e})", change)
    weights = np.zeros(X.shape[1])
    weights[active] = w
    return LinearModel(weights, float(b), scaler, Classifier.LASSO, tuple(trace), it + 1)


def train_svm(X, y, cfg: TrainConfig = TrainConfig()) -> LinearModel:
    """Linear soft-margin SVM solved in the dual by two-coordinate descent.

    Minimizes ``0.5 ||w||^2 + C sum(max(0, 1 - y (w.x + b)))``; the
    equality constraint from the free intercept forces pairwise updates
    (maximal violator for the first index, second-order gain for the
    second). Stops when the KKT violation is at most
    ``cfg.tol``. ``objective_trace`` records the dual objective negated,
    which decreases monotonically.
    """
    X, y = check_training_data(X, y)
    C = cfg.c
    scaler = Scaler.fit(X)
    Z = scaler.transform(X)
    Z[:, scaler.constant] = 0.0
    K = Z @ Z.T
    diag = np.diag(K).copy()
    Q = K * np.outer(y, y)
    m = len(y)
    alpha = np.zeros(m)
    G = -np.ones(m)
    trace = [0.0]
    pos = y > 0
    for it in range(cfg.max_iter):
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        score = -y * G
        i = int(np.argmax(np.where(up, score, -np.inf)))
        violation = score[i] - np.min(np.where(low, score, np.inf))
        if violation <= cfg.tol:
            break
        # second-order choice of j: largest guaranteed dual decrease
        gap = score[i] - score
        curv = np.maximum(K[i, i] + diag - 2.0 * K[i], 1e-12)
        j = int(np.argmax(np.where(low & (gap > 0), gap * gap / curv, -np.inf)))
        t = gap[j] / curv[j]
        # alpha_i moves by y_i t, alpha_j by -y_j t
        t = min(t, C - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else C - alpha[j])
        di, dj = y[i] * t, -y[j] * t
        alpha[i] = np.clip(alpha[i] + di, 0.0, C)
        alpha[j] = np.clip(alpha[j] + dj, 0.0, C)
        G += Q[:, i] * di + Q[:, j] * dj
        trace.append(0.5 * alpha @ (G - 1.0))
    else:
        raise ConvergenceError(
            f"SVM did not converge in {cfg.max_iter} iterations (violation {violation:.3e})", violation)
    score = -y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        b = float(score[free].mean())
    else:
        at_zero, at_c = alpha <= 0, alpha >= C
        lower = score[(at_zero & pos) | (at_c & ~pos)]
        upper = score[(at_zero & ~pos) | (at_c & pos)]
        lo = lower.max() if lower.size else upper.min()
        hi = upper.min() if upper.size else lower.max()
        b = float(0.5 * (lo + hi))
    w = Z.T @ (alpha * y)
    return LinearModel(w, b, scaler, Classifier.SVM, tuple(trace), it, alpha)


def svm_objectives(model: LinearModel, X, y, c: float):
    """Primal and dual objective values of a trained SVM."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    margins = y * model.decision(X)
    w = model.weights
    primal = 0.5 * w @ w + c * np.maximum(0.0, 1.0 - margins).sum()
    dual = model.dual_coef.sum() - 0.5 * w @ w
    return float(primal), float(dual)
