"""Logistic regression by iteratively reweighted least squares.

Used for the on-trial score: the probability that a subject was enrolled in
the trial given baseline covariates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit


class SingularInformation(np.linalg.LinAlgError):
    """Design matrix (with intercept) is rank deficient."""


@dataclass(frozen=True)
class OnTrialModel:
    intercept: float
    coefficients: np.ndarray
    converged: bool
    iterations: int
    separated: bool = False

    def linear_predictor(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        return self.intercept + features @ self.coefficients

    def predict(self, features) -> np.ndarray:
        return expit(self.linear_predictor(features))


def log_likelihood(beta, design, labels, weights) -> float:
    eta = design @ beta
    return float(np.sum(weights * (labels * log_expit(eta) + (1 - labels) * log_expit(-eta))))


def fit_logistic(features, labels, weights=None, max_iter: int = 100) -> OnTrialModel:
    """Fit a main-effects logistic regression with intercept.

    Parameters
    ----------
    features : array, shape (n, k)
    labels : bool array, shape (n,)
        The "success" class; for on-trial scores this is trial membership.
    weights : array, shape (n,), optional
        Case weights for the Bernoulli log-likelihood.
    max_iter : int
        IRLS iteration cap.

    Returns
    -------
    OnTrialModel
        ``converged`` is False (and ``separated`` True) when a coefficient
        runs past magnitude 30 without the score vanishing.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    y = np.asarray(labels, dtype=float)
    n, k = features.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if n < k + 1:
        raise ValueError(f"need at least {k + 1} observations, got {n}")
    if not np.all(np.isfinite(features)):
        raise ValueError("features contain missing or non-finite values")
    if y.min() == y.max():
        raise ValueError("labels must contain both classes")
    design = np.column_stack([np.ones(n), features])
    if np.linalg.matrix_rank(design * np.sqrt(w)[:, None]) < k + 1:
        raise SingularInformation("features are collinear with each other or the intercept")

    beta = np.zeros(k + 1)
    ll = log_likelihood(beta, design, y, w)
    converged = separated = False
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(design @ beta)
        score = design.T @ (w * (y - p))
        if np.max(np.abs(score)) < 1e-8:
            converged = True
            it -= 1
            break
        info = (design * (w * p * (1 - p))[:, None]).T @ design
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            separated = True
            break
        beta = beta + step
        if np.max(np.abs(beta)) > 30:
            separated = True
            break
        new_ll = log_likelihood(beta, design, y, w)
        if abs(new_ll - ll) < 1e-10 * abs(ll):
            converged = True
            break
        ll = new_ll
    if separated:
        converged = False
    return OnTrialModel(
        intercept=float(beta[0]),
        coefficients=beta[1:].copy(),
        converged=converged,
        iterations=it,
        separated=separated,
    )
