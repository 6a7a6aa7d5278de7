"""Kaplan-Meier product-limit estimator with Greenwood standard errors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class KmCurve:
    event_times: np.ndarray
    survival: np.ndarray
    greenwood_se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray
    median: float | None
    median_ci: tuple[float | None, float | None] | None

    def __call__(self, t) -> np.ndarray:
        """Step-function evaluation S(t) (right-continuous)."""
        idx = np.searchsorted(self.event_times, np.asarray(t, dtype=float), side="right")
        return np.concatenate([[1.0], self.survival])[idx]


def _first_at_or_below(times, values, level):
    hit = np.flatnonzero(values <= level)
    return float(times[hit[0]]) if hit.size else None


def km_estimate(time, status, conf_level: float = 0.95) -> KmCurve:
    """Product-limit survival curve.

    Confidence limits use Greenwood's variance on the log scale,
    ``exp(log S ± z sqrt(sum d / (n (n - d))))``, clipped to [0, 1]. Once
    the curve reaches zero the log-scale interval is undefined and
    the standard error and both limits are reported as 0.

    The median is the first event time with S(t) <= 0.5; its interval is
    read off the pointwise limits the same way.
    """
    time = np.asarray(time, dtype=float)
    status = np.asarray(status, dtype=bool)
    if time.size == 0:
        raise ValueError("need at least one subject")
    if not 0 < conf_level < 1:
        raise ValueError("conf_level must lie in (0, 1)")
    uniq, inverse = np.unique(time, return_inverse=True)
    deaths = np.bincount(inverse, weights=status, minlength=uniq.size)
    removed = np.bincount(inverse, minlength=uniq.size)
    at_risk = time.size - np.concatenate([[0], np.cumsum(removed)[:-1]])
    keep = deaths > 0
    t, d, n = uniq[keep], deaths[keep], at_risk[keep].astype(float)

    surv = np.cumprod(1.0 - d / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        cum = np.cumsum(d / (n * (n - d)))
    z = norm.ppf(0.5 + conf_level / 2)
    alive = surv > 0
    log_se = np.where(alive, np.sqrt(cum), 0.0)
    se = np.where(alive, surv * log_se, 0.0)
    with np.errstate(divide="ignore"):
        log_s = np.log(np.where(alive, surv, 1.0))
    lo = np.where(alive, np.exp(log_s - z * log_se), 0.0)
    hi = np.where(alive, np.minimum(np.exp(log_s + z * log_se), 1.0), 0.0)

    median = _first_at_or_below(t, surv, 0.5)
    median_ci = None
    if median is not None:
        median_ci = (_first_at_or_below(t, hi, 0.5), _first_at_or_below(t, lo, 0.5))
    return KmCurve(t, surv, se, lo, hi, n.astype(int), d.astype(int), median, median_ci)
