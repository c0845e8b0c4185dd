"""L2-regularized logistic regression fitted by gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .tree import check_dimension

ARMIJO = 1e-4
MAX_HALVINGS = 60


@dataclass(frozen=True)
class LogisticModel:
    beta: np.ndarray
    intercept: float
    converged: bool = True
    n_iter: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        if beta.ndim != 1 or not np.all(np.isfinite(beta)) or not np.isfinite(self.intercept):
            raise ValueError("logistic coefficients must be a finite vector")
        object.__setattr__(self, "beta", beta)

    @property
    def feature_dimension(self) -> int:
        return len(self.beta)

    def raw_score(self, X) -> np.ndarray:
        if not sp.issparse(X):
            X = np.asarray(X, dtype=np.float64)
        check_dimension(X, len(self.beta))
        return np.asarray(X @ self.beta).ravel() + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.raw_score(X))


def objective(beta: np.ndarray, intercept: float, X, y: np.ndarray, l2_lambda: float) -> float:
    """Negative log-likelihood summed over samples plus (lambda/2)*|beta|^2."""
    z = np.asarray(X @ beta).ravel() + intercept
    return float(np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * l2_lambda * beta @ beta)


def gradient(beta: np.ndarray, intercept: float, X, y: np.ndarray, l2_lambda: float) -> tuple[np.ndarray, float]:
    z = np.asarray(X @ beta).ravel() + intercept
    r = expit(z) - y
    g = np.asarray(X.T @ r).ravel() + l2_lambda * beta
    return g, float(r.sum())


def fit_logistic(X, y, l2_lambda: float = 1.0, max_iter: int = 1000, tol: float = 1e-6) -> LogisticModel:
    """Minimize the penalized loss; the intercept is not penalized.

    Steps start from the Barzilai-Borwein estimate and are halved until the
    Armijo condition holds.  Stops once the gradient max-norm is <= ``tol``;
    hitting ``max_iter`` first is reported through ``converged=False``.
    """
    if l2_lambda < 0:
        raise ValueError("l2_lambda must be non-negative")
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
    else:
        X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError("X and y disagree on the number of samples")
    if not (np.any(y == 1) and np.any(y == 0)) or not np.all((y == 0) | (y == 1)):
        raise ValueError("logistic regression needs 0/1 labels with both classes present")
    n, p = X.shape
    w = np.zeros(p + 1)

    def f(w):
        return objective(w[:p], w[p], X, y, l2_lambda)

    def grad(w):
        g, g0 = gradient(w[:p], w[p], X, y, l2_lambda)
        return np.append(g, g0)

    fw = f(w)
    g = grad(w)
    # conservative first step; backtracking corrects it if still too long
    step = 1.0 / (0.25 * n + l2_lambda + 1.0)
    prev_w = prev_g = None
    converged = False
    n_iter = 0
    while True:
        if np.max(np.abs(g)) <= tol:
            converged = True
            break
        if n_iter >= max_iter:
            break
        if prev_w is not None:
            s = w - prev_w
            d = g - prev_g
            sd = s @ d
            if sd > 0:
                step = (s @ s) / sd
        gg = g @ g
        for _ in range(MAX_HALVINGS):
            cand = w - step * g
            fc = f(cand)
            if fc <= fw - ARMIJO * step * gg:
                break
            step *= 0.5
        else:
            # no descent at machine precision: the iterate is as good as it gets
            break
        prev_w, prev_g = w, g
        w, fw = cand, fc
        g = grad(w)
        n_iter += 1
    params = {"l2_lambda": l2_lambda, "max_iter": max_iter, "tol": tol}
    return LogisticModel(w[:p].copy(), float(w[p]), converged, n_iter, params)
