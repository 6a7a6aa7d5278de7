import numpy as np
import pytest
from scipy.special import logsumexp

from hybrid_control.methods import ALPHA_GRID, DegenerateProfile, analyze_npp, analyze_power_prior, analyze_trial_only, estimate_npp_alpha
from hybrid_control.methods.npp import summarize
from hybrid_control.model import Cohort

from .conftest import make_cohort


def quadrature_alpha_hat(trial, external, step=0.02):
    """Posterior mean of alpha by dense 2-D integration over (theta, log baseline rate).

    Exponential working likelihoods, flat priors on theta and the log rate,
    uniform prior on the alpha grid.
    """
    p = summarize(trial, external)
    (dc, dt, d0), (yc, yt, y0) = p.events[:, 0], p.exposure[:, 0]
    theta = np.arange(-30, 20, step)
    lam = np.arange(-40, 10, step)
    T, L = np.meshgrid(theta, lam, indexing="ij")
    ll_trial = dc * L - np.exp(L) * yc + dt * (L + T) - np.exp(L + T) * yt
    # the trial part does not involve alpha, so sum out theta once
    trial_in_lam = logsumexp(ll_trial, axis=0) + np.log(step)
    ll_ext = d0 * lam - np.exp(lam) * y0
    logm = []
    for a in ALPHA_GRID:
        num = logsumexp(trial_in_lam + a * ll_ext) + np.log(step)
        # normalizer: grid plus the analytic tail exp(a d0 lam) below the grid
        body = logsumexp(a * ll_ext) + np.log(step)
        tail = a * d0 * lam[0] - np.log(a * d0)
        logm.append(num - np.logaddexp(body, tail))
    logm = np.array(logm)
    post = np.exp(logm - logm.max())
    return float(np.sum(post / post.sum() * ALPHA_GRID))


def toy(seed):
    rng = np.random.default_rng(seed)
    trial = make_cohort(
        np.round(rng.exponential(1.0, 5), 2), [1, 1, 1, 1, 0], [1, 1, 1, 0, 0]
    )
    ext = make_cohort(
        np.round(rng.exponential(1 / rng.uniform(0.3, 3), 5), 2),
        [1, 1, 0, 1, 1],
        [0] * 5,
        external=np.ones(5, bool),
        prefix="E",
    )
    return trial, ext


@pytest.mark.parametrize("seed", range(6))
def test_alpha_hat_matches_quadrature(seed):
    trial, ext = toy(seed)
    oracle = quadrature_alpha_hat(trial, ext)
    assert abs(estimate_npp_alpha(trial, ext).alpha_hat - oracle) <= 0.02


def test_quadrature_oracle_resolution():
    trial, ext = toy(0)
    assert quadrature_alpha_hat(trial, ext, 0.02) == pytest.approx(quadrature_alpha_hat(trial, ext, 0.01), abs=1e-6)


def test_profile_is_a_normalized_distribution():
    trial, ext = toy(1)
    prof = estimate_npp_alpha(trial, ext)
    assert 0 < prof.alpha_hat < 1
    assert np.all(prof.posterior >= 0) and prof.posterior.sum() == pytest.approx(1.0, abs=1e-12)
    assert [a for a, _ in prof.profile] == ALPHA_GRID.tolist()


def test_grid():
    assert ALPHA_GRID[0] == 0.005 and ALPHA_GRID[-1] == 0.995 and len(ALPHA_GRID) == 100


def test_degenerate_inputs():
    trial, ext = toy(0)
    no_ext_events = make_cohort(ext.time, [0] * 5, [0] * 5, external=np.ones(5, bool), prefix="E")
    with pytest.raises(DegenerateProfile):
        estimate_npp_alpha(trial, no_ext_events)
    no_treated_events = make_cohort(trial.time, [0, 0, 0, 1, 1], trial.treatment)
    with pytest.raises(DegenerateProfile):
        estimate_npp_alpha(no_treated_events, ext)


def test_npp_is_power_prior_at_alpha_hat_and_tends_to_trial_only():
    trial, ext = toy(2)
    res = analyze_npp(trial, ext)
    pp = analyze_power_prior(trial, ext, res.alpha_hat)
    assert res.log_hr == pp.log_hr and res.ess == pp.ess
    # alpha = 0 makes the normalizing integral improper, so approach the limit
    tiny = analyze_npp(trial, ext, alphas=np.array([1e-9]))
    assert tiny.log_hr == pytest.approx(analyze_trial_only(trial).log_hr, abs=1e-6)


def _arm(rng, n, rate, prefix, external=False, treatment=None):
    return make_cohort(
        rng.exponential(1 / rate, n),
        np.ones(n, bool),
        np.zeros(n, np.int8) if treatment is None else treatment,
        external=np.full(n, external),
        prefix=prefix,
    )


def test_similar_external_gets_more_borrowing():
    # external = copy of the control arm, versus the same copy with times x4
    rng = np.random.default_rng(77)
    wins, same, scaled = 0, [], []
    for _ in range(500):
        n = 60
        treat = (rng.random(n) < 0.5).astype(np.int8)
        trial = make_cohort(rng.exponential(1 / np.where(treat == 1, 0.7, 1.0)), np.ones(n, bool), treat)
        soc = trial.take(trial.treatment == 0)
        copy = Cohort(["E" + i for i in soc.ids], soc.covariates, np.ones(len(soc), bool), soc.treatment, soc.time, soc.status)
        far = Cohort(copy.ids, copy.covariates, copy.external, copy.treatment, copy.time * 4, copy.status)
        a = estimate_npp_alpha(trial, copy).alpha_hat
        b = estimate_npp_alpha(trial, far).alpha_hat
        same.append(a)
        scaled.append(b)
        wins += a > b
    assert np.mean(same) > np.mean(scaled)
    assert wins / 500 > 0.95
