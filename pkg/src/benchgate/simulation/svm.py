"""Linear SVM (L2-regularised hinge loss) trained by dual coordinate descent."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numba
import numpy as np

from ..errors import ConvergenceWarning, InvalidArgument, SingleClass

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    bias: float
    converged: bool = True
    n_iter: int = 0

    def decision_function(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.weights + self.bias


def score(model: LinearModel, vectors) -> np.ndarray:
    return model.decision_function(vectors)


@numba.njit(cache=True)
def _dual_cd(X, y, C, tol, max_iter, order):
    n, d = X.shape
    w = np.zeros(d + 1)  # w[d] is the bias, trained as a constant feature
    alpha = np.zeros(n)
    qd = np.empty(n)
    for i in range(n):
        s = 1.0
        for j in range(d):
            s += X[i, j] * X[i, j]
        qd[i] = s
    for it in range(max_iter):
        pg_max = -np.inf
        pg_min = np.inf
        for k in range(n):
            i = order[k]
            yi = y[i]
            margin = w[d]
            for j in range(d):
                margin += w[j] * X[i, j]
            g = yi * margin - 1.0
            a = alpha[i]
            if a == 0.0:
                pg = min(g, 0.0)
            elif a == C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg > pg_max:
                pg_max = pg
            if pg < pg_min:
                pg_min = pg
            if abs(pg) > 1e-12:
                new = min(max(a - g / qd[i], 0.0), C)
                step = (new - a) * yi
                if step != 0.0:
                    for j in range(d):
                        w[j] += step * X[i, j]
                    w[d] += step
                    alpha[i] = new
        if pg_max - pg_min <= tol:
            return w, it + 1, True
    return w, max_iter, False


def train_linear_svm(
    vectors,
    labels,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> LinearModel:
    """Fit a linear SVM with hinge loss; the bias is regularised like a weight.

    Coordinates are visited in one seeded permutation that stays fixed for
    every epoch. Training stops when the projected-gradient spread over an
    epoch drops to ``tol``; otherwise a ConvergenceWarning is issued and the
    last iterate is returned.
    """
    X = np.ascontiguousarray(vectors, dtype=np.float64)
    lab = np.asarray(labels).astype(bool)
    if X.ndim != 2 or X.shape[0] != lab.size:
        raise InvalidArgument("vectors must be (n, d) with one label per row")
    if C <= 0:
        raise InvalidArgument("C must be positive")
    if not np.isfinite(X).all():
        raise InvalidArgument("features must be finite")
    if lab.all() or not lab.any():
        raise SingleClass("training data contains a single class")
    y = np.where(lab, 1.0, -1.0)
    order = np.random.default_rng(seed).permutation(X.shape[0]).astype(np.int64)
    w, n_iter, converged = _dual_cd(X, y, float(C), float(tol), int(max_iters), order)
    if not converged:
        warnings.warn(
            f"dual coordinate descent stopped after {n_iter} epochs without reaching tol={tol}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return LinearModel(w[:-1].copy(), float(w[-1]), bool(converged), int(n_iter))
