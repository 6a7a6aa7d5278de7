"""Analysis strategies for a trial whose control arm is augmented with external patients.

Every strategy ends in the same place: a weighted Cox model of survival on
the treatment indicator, trial subjects weighted 1, external subjects
weighted according to the strategy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..estimators import CoxFit, OnTrialModel, fit_analysis_set, fit_logistic
from ..model import (
    AnalysisSet,
    Cohort,
    EstimationError,
    InsufficientExternals,
    Method,
    MethodResult,
    Treatment,
)
from .matching import match_optimal
from .npp import ALPHA_GRID, estimate_npp_alpha


class InfiniteOdds(EstimationError):
    pass


def _arm_sizes(trial: Cohort) -> tuple[int, int]:
    n_t = int(np.count_nonzero(trial.treatment == Treatment.INTERVENTION))
    return n_t, len(trial) - n_t


def _result(method, aset: AnalysisSet, fit: CoxFit, robust: bool, **extra) -> MethodResult:
    return MethodResult(
        method=method,
        log_hr=fit.log_hr,
        se=fit.se_robust if robust else fit.se_model,
        ess=aset.ess,
        n_external_used=aset.n_external_used,
        converged=fit.converged,
        note=extra.pop("note", fit.flag),
        **extra,
    )


def weighted_analysis(trial: Cohort, external: Cohort, external_weights, method, robust=True, **extra):
    """Cox fit on ``trial`` (weight 1) plus ``external`` with the given weights."""
    external_weights = np.asarray(external_weights, dtype=float)
    keep = external_weights > 0
    ext = external.take(keep)
    cohort = trial.concat(ext)
    w = np.concatenate([np.ones(len(trial)), external_weights[keep]])
    aset = AnalysisSet(cohort, w)
    return _result(method, aset, fit_analysis_set(aset), robust, **extra)


def analyze_trial_only(trial: Cohort, external: Cohort | None = None) -> MethodResult:
    aset = AnalysisSet(trial, np.ones(len(trial)))
    return _result(Method.TRIAL_ONLY, aset, fit_analysis_set(aset), robust=False)


def analyze_full_pooling(trial: Cohort, external: Cohort) -> MethodResult:
    return weighted_analysis(trial, external, np.ones(len(external)), Method.FULL_POOLING, robust=False)


def analyze_power_prior(trial: Cohort, external: Cohort, alpha: float) -> MethodResult:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"power prior alpha must lie in [0, 1], got {alpha}")
    return weighted_analysis(
        trial, external, np.full(len(external), float(alpha)), Method.POWER_PRIOR, alpha_hat=float(alpha)
    )


def analyze_npp(trial: Cohort, external: Cohort, alphas=ALPHA_GRID, n_pieces: int = 1) -> MethodResult:
    prof = estimate_npp_alpha(trial, external, alphas=alphas, n_pieces=n_pieces)
    res = weighted_analysis(
        trial,
        external,
        np.full(len(external), prof.alpha_hat),
        Method.NORMALIZED_POWER_PRIOR,
        alpha_hat=prof.alpha_hat,
    )
    res.diagnostics["profile"] = prof
    return res


def fit_on_trial_score(trial: Cohort, external: Cohort) -> tuple[OnTrialModel, np.ndarray, np.ndarray]:
    """Logistic model of trial membership on all baseline covariates.

    Both trial arms enter the fit. Returns the model with the fitted scores
    for the trial and external subjects.
    """
    features = np.vstack([trial.covariates, external.covariates])
    labels = np.concatenate([np.ones(len(trial), bool), np.zeros(len(external), bool)])
    model = fit_logistic(features, labels)
    return model, model.predict(trial.covariates), model.predict(external.covariates)


@dataclass(frozen=True)
class DawWeights:
    selected: np.ndarray  # indices into the external cohort, highest score first
    selected_ids: list[str]
    scores: np.ndarray
    raw_odds: np.ndarray
    standardized: np.ndarray

    def full(self, n_external: int) -> np.ndarray:
        w = np.zeros(n_external)
        w[self.selected] = self.standardized
        return w


def daw_weights_from_scores(external_scores, n_select: int, ids=None) -> DawWeights:
    """Pick the ``n_select`` highest-scoring externals and standardize their odds.

    Ties at the selection boundary fall to the earlier subject.
    """
    e = np.asarray(external_scores, dtype=float)
    if n_select <= 0:
        raise ValueError("nothing to select")
    if e.size < n_select:
        raise InsufficientExternals(f"need {n_select} external subjects, have {e.size}")
    order = np.argsort(-e, kind="stable")[:n_select]
    sel = e[order]
    if np.any(sel >= 1.0 - 1e-12):
        raise InfiniteOdds("a selected on-trial score is numerically 1")
    odds = sel / (1.0 - sel)
    std = odds * (n_select / odds.sum())
    ids = [str(i) for i in (np.asarray(ids)[order] if ids is not None else order)]
    return DawWeights(order, ids, sel, odds, std)


def compute_daw_weights(trial: Cohort, external: Cohort, external_scores=None) -> DawWeights:
    n_t, n_c = _arm_sizes(trial)
    if external_scores is None:
        _, _, external_scores = fit_on_trial_score(trial, external)
    return daw_weights_from_scores(external_scores, n_t - n_c, ids=external.ids)


def analyze_daw(trial: Cohort, external: Cohort, external_scores=None) -> MethodResult:
    n_t, n_c = _arm_sizes(trial)
    if n_t - n_c <= 0:
        res = analyze_trial_only(trial)
        return replace(res, method=Method.DAW, note="no_shortfall")
    dw = compute_daw_weights(trial, external, external_scores)
    res = weighted_analysis(trial, external, dw.full(len(external)), Method.DAW)
    res.diagnostics["weights"] = dw
    return res


def analyze_lin(
    trial: Cohort,
    external: Cohort,
    rng: np.random.Generator | int | None = None,
    scores: tuple[np.ndarray, np.ndarray] | None = None,
) -> MethodResult:
    """Matching on the on-trial score, then a random draw weighted by the score.

    Each intervention-arm subject is matched to an external subject; from the
    matched externals ``N_T - N_C`` are drawn at random and enter the model
    with weight equal to their on-trial score.
    """
    n_t, n_c = _arm_sizes(trial)
    if n_t - n_c <= 0:
        res = analyze_trial_only(trial)
        return replace(res, method=Method.LIN, note="no_shortfall")
    if len(external) < n_t:
        raise InsufficientExternals(f"{n_t} intervention subjects but {len(external)} externals")
    rng = np.random.default_rng(rng)
    if scores is None:
        _, trial_scores, ext_scores = fit_on_trial_score(trial, external)
    else:
        trial_scores, ext_scores = scores
    treated = trial.treatment == Treatment.INTERVENTION
    match = match_optimal(trial_scores[treated], ext_scores)
    pool = match.matched_external
    drawn = np.sort(rng.choice(pool, size=n_t - n_c, replace=False))
    w = np.zeros(len(external))
    w[drawn] = ext_scores[drawn]
    res = weighted_analysis(trial, external, w, Method.LIN)
    res.diagnostics["match"] = match
    res.diagnostics["drawn"] = drawn
    return res
