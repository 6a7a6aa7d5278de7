"""Data-driven borrowing fraction for the normalized power prior.

The external data are only informative about the standard-of-care hazard,
and a Cox partial likelihood of an all-control cohort is flat in the
treatment effect. The marginal posterior of the borrowing fraction is
therefore computed under a proportional hazards working model with a
piecewise-constant baseline (one piece by default: exponential):

    trial:    hazard exp(lambda_j + theta * treated)
    external: hazard exp(lambda_j)

With flat priors, each baseline log-rate integrates out in closed form (a
gamma integral), the treatment log-HR integral is done by Laplace's method,
and the normalizing constant of the power prior is exact. The posterior of
alpha is evaluated on a grid with a uniform prior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ..model import Cohort, EstimationError, Treatment

ALPHA_GRID = np.round(np.arange(0.005, 1.0, 0.01), 3)


class DegenerateProfile(EstimationError):
    pass


@dataclass(frozen=True)
class NppProfile:
    alpha_hat: float
    alphas: np.ndarray
    log_marginal: np.ndarray
    posterior: np.ndarray
    skipped: tuple[float, ...] = field(default=())

    @property
    def profile(self) -> list[tuple[float, float]]:
        return list(zip(self.alphas.tolist(), self.log_marginal.tolist()))


@dataclass(frozen=True)
class _Pieces:
    events: np.ndarray  # (3, J): trial control, trial treated, external
    exposure: np.ndarray


def _piece_edges(external: Cohort, n_pieces: int) -> np.ndarray:
    ext_events = external.time[external.status]
    if ext_events.size < n_pieces:
        raise DegenerateProfile(
            f"{ext_events.size} external events cannot populate {n_pieces} baseline pieces"
        )
    inner = np.quantile(ext_events, np.arange(1, n_pieces) / n_pieces) if n_pieces > 1 else []
    return np.concatenate([[0.0], inner, [np.inf]])


def summarize(trial: Cohort, external: Cohort, n_pieces: int = 1) -> _Pieces:
    edges = _piece_edges(external, n_pieces)
    widths = np.diff(edges)
    groups = (
        trial.take(trial.treatment == Treatment.STANDARD_OF_CARE),
        trial.take(trial.treatment == Treatment.INTERVENTION),
        external,
    )
    events = np.zeros((3, n_pieces))
    exposure = np.zeros((3, n_pieces))
    for g, c in enumerate(groups):
        piece = np.clip(np.searchsorted(edges, c.time, side="left") - 1, 0, n_pieces - 1)
        events[g] = np.bincount(piece, weights=c.status, minlength=n_pieces)
        exposure[g] = np.clip(c.time[:, None] - edges[:-1], 0.0, widths).sum(axis=0)
    return _Pieces(events, exposure)


def _log_marginals(p: _Pieces, alphas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log marginal likelihood of each alpha, plus the Laplace curvature.

    Numerator: Laplace's method for the treatment log-HR integral, done for
    all grid points at once. Denominator: exact gamma integrals.
    """
    d_c, d_t, d_0 = p.events
    y_c, y_t, y_0 = p.exposure
    a = alphas[:, None]
    shape = d_c + d_t + a * d_0
    base = y_c + a * y_0
    dt_total = d_t.sum()

    # the integrand is log-concave in theta; Newton from the pooled rate ratio
    theta = np.log(dt_total / y_t.sum()) - np.log(shape.sum(1) / base.sum(1))
    for _ in range(100):
        e = np.exp(theta)[:, None] * y_t
        grad = dt_total - np.sum(shape * e / (base + e), axis=1)
        curv = np.sum(shape * e * base / (base + e) ** 2, axis=1)
        step = np.where(curv > 0, grad / np.where(curv > 0, curv, 1.0), 0.0)
        theta = theta + step
        if np.max(np.abs(step)) < 1e-12:
            break
    e = np.exp(theta)[:, None] * y_t
    curv = np.sum(shape * e * base / (base + e) ** 2, axis=1)
    g = theta * dt_total + np.sum(gammaln(shape) - shape * np.log(base + e), axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        numerator = g + 0.5 * np.log(2 * np.pi) - 0.5 * np.log(curv)
        a0 = a * d_0
        # improper (infinite) at alpha = 0
        normalizer = np.sum(gammaln(a0) - a0 * np.log(a * y_0), axis=1)
    return numerator - normalizer, curv


def estimate_npp_alpha(
    trial: Cohort, external: Cohort, alphas=ALPHA_GRID, n_pieces: int = 1
) -> NppProfile:
    """Posterior mean of the borrowing fraction and its log-marginal profile.

    Raises
    ------
    DegenerateProfile
        If no arm has the events needed for proper integrals, or every grid
        point had non-positive Laplace curvature.
    """
    p = summarize(trial, external, n_pieces)
    if p.events[1].sum() == 0:
        raise DegenerateProfile("no events in the trial intervention arm")
    if np.any(p.events[2] == 0):
        raise DegenerateProfile("a baseline piece has no external events")
    if np.any(p.events[0] + p.events[1] + p.events[2] == 0):
        raise DegenerateProfile("a baseline piece has no events")
    alphas = np.asarray(alphas, dtype=float)
    logm, curv = _log_marginals(p, alphas)
    ok = (curv > 0) & np.isfinite(logm)
    logm = np.where(ok, logm, np.nan)
    if not ok.any():
        raise DegenerateProfile("Laplace curvature non-positive at every grid point")
    # uniform prior on alpha: posterior weights are the normalized marginals
    post = np.zeros_like(logm)
    post[ok] = np.exp(logm[ok] - logm[ok].max())
    post /= post.sum()
    return NppProfile(
        alpha_hat=float(np.sum(post * alphas)),
        alphas=alphas,
        log_marginal=logm,
        posterior=post,
        skipped=tuple(alphas[~ok].tolist()),
    )
