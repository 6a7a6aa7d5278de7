"""Weighted Cox proportional hazards fit for a single covariate.

The outcome model in every analysis has the treatment indicator as its only
covariate, so the fit is one-dimensional. Each subject's partial-likelihood
factor is raised to its case weight, and tied event times share a risk set
(Breslow), which makes integer weights identical to duplicating rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import AnalysisSet, EstimationError

CLAMP = 15.0


class NoEvents(EstimationError):
    pass


class NoTreatmentVariation(EstimationError):
    pass


@dataclass(frozen=True)
class CoxFit:
    log_hr: float
    se_model: float
    se_robust: float
    loglik: float
    converged: bool
    iterations: int = 0
    score: float = 0.0
    flag: str = ""


class _SortedData:
    """Time-sorted arrays plus tie-group bookkeeping, reused across Newton steps."""

    def __init__(self, time, status, x, weights):
        order = np.argsort(time, kind="stable")
        t = time[order]
        self.order = order
        self.x = x[order]
        self.w = weights[order]
        self.dw = self.w * status[order]
        n = len(t)
        new_group = np.empty(n, dtype=bool)
        if n:
            new_group[0] = True
            new_group[1:] = t[1:] != t[:-1]
        starts = np.flatnonzero(new_group)
        ends = np.append(starts[1:], n) - 1
        group = np.cumsum(new_group) - 1
        # risk set of a subject begins at the first member of its tie group
        self.first = starts[group]
        # events "at or before" a subject's time end at the last member of its group
        self.last = ends[group]
        self.has_events = self.dw > 0

    def moments(self, theta):
        r = self.w * np.exp(self.x * theta)
        rx = r * self.x
        s0 = np.cumsum(r[::-1])[::-1][self.first]
        s1 = np.cumsum(rx[::-1])[::-1][self.first]
        s2 = np.cumsum((rx * self.x)[::-1])[::-1][self.first]
        return r, s0, s1, s2

    def evaluate(self, theta):
        """Log partial likelihood, score and information at ``theta``."""
        _, s0, s1, s2 = self.moments(theta)
        ev = self.has_events
        dw, s0, s1, s2 = self.dw[ev], s0[ev], s1[ev], s2[ev]
        xbar = s1 / s0
        ll = float(np.sum(dw * (self.x[ev] * theta - np.log(s0))))
        score = float(np.sum(dw * (self.x[ev] - xbar)))
        info = float(np.sum(dw * (s2 / s0 - xbar * xbar)))
        return ll, score, info

    def score_residuals(self, theta):
        r, s0, s1, _ = self.moments(theta)
        xbar = s1 / s0
        hazard = np.where(self.has_events, self.dw / s0, 0.0)
        a = np.cumsum(hazard)[self.last]
        b = np.cumsum(hazard * xbar)[self.last]
        own = np.where(self.has_events, self.x - xbar, 0.0)
        return own - np.exp(self.x * theta) * (self.x * a - b)


def partial_loglik(time, status, x, weights, theta) -> float:
    """Weighted Breslow log partial likelihood; handy for oracles and profiles."""
    data = _SortedData(*_as_arrays(time, status, x, weights))
    return data.evaluate(theta)[0]


def _as_arrays(time, status, x, weights):
    time = np.asarray(time, dtype=float)
    status = np.asarray(status, dtype=float)
    x = np.asarray(x, dtype=float)
    weights = np.ones_like(time) if weights is None else np.asarray(weights, dtype=float)
    return time, status, x, weights


def fit_weighted_cox(time, status, x, weights=None, tol: float = 1e-9, max_iter: int = 50) -> CoxFit:
    """Maximize the weighted partial likelihood by Newton's method.

    Starts at 0 and halves the step (up to 10 times) whenever the likelihood
    would decrease. When the likelihood is monotone the estimate runs into the
    ``±CLAMP`` boundary and the fit comes back with ``converged=False`` and
    ``flag="monotone"``.

    Raises
    ------
    NoEvents
        If no subject with positive weight has an event.
    """
    time, status, x, weights = _as_arrays(time, status, x, weights)
    if not np.any((status > 0) & (weights > 0)):
        raise NoEvents("no events among positively weighted subjects")
    data = _SortedData(time, status, x, weights)

    theta = 0.0
    ll, score, info = data.evaluate(theta)
    if info <= 0.0:
        return CoxFit(0.0, np.inf, np.inf, ll, False, 0, score, "no_treatment_variation")
    converged = abs(score) < tol
    it = 0
    flag = ""
    while not converged and it < max_iter:
        it += 1
        step = score / info if info > 0 else np.sign(score) * 1.0
        new = float(np.clip(theta + step, -CLAMP, CLAMP))
        new_ll, new_score, new_info = data.evaluate(new)
        halvings = 0
        while new_ll < ll and halvings < 10:
            halvings += 1
            new = theta + (new - theta) / 2
            new_ll, new_score, new_info = data.evaluate(new)
        moved = new != theta
        theta, ll, score, info = new, new_ll, new_score, new_info
        # second test: on very large samples rounding in the summed score exceeds an
        # absolute 1e-9, so a Newton step below 1e-10 also counts
        if abs(score) < tol or (info > 0 and abs(score / info) < 1e-10):
            converged = True
        elif abs(theta) >= CLAMP or not moved:
            break
    if not converged:
        flag = "monotone" if abs(theta) >= CLAMP or info < 1e-12 else "max_iter"
    if info <= 0.0:
        return CoxFit(theta, np.inf, np.inf, ll, False, it, score, flag or "no_treatment_variation")
    resid = data.score_residuals(theta)
    meat = float(np.sum((data.w * resid) ** 2))
    return CoxFit(
        log_hr=theta,
        se_model=float(1.0 / np.sqrt(info)),
        se_robust=float(np.sqrt(meat) / info),
        loglik=ll,
        converged=converged,
        iterations=it,
        score=score,
        flag=flag,
    )


def fit_analysis_set(aset: AnalysisSet, **kwargs) -> CoxFit:
    """Weighted Cox of survival on treatment for an :class:`AnalysisSet`."""
    c = aset.cohort
    return fit_weighted_cox(c.time, c.status, c.treatment, aset.weights, **kwargs)
