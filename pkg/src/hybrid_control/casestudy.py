"""Synthetic stand-in for a hybrid-control case study.

Arm sizes follow a 2:1 trial (791 intervention, 394 standard of care) plus
1,000 external patients. Covariates are age, ECOG performance status 1 and 2
indicators and a log-PSA-like marker. The external cohort is older, sicker and
has worse survival, so on-trial scores separate the sources without
perfect separation. Because the design is fixed, augmenting the control arm
to 1:1 always requires 791 - 394 = 397 external patients.

Run ``python -m hybrid_control.casestudy OUT.csv`` to write the CSV.
"""

from __future__ import annotations

import argparse

import numpy as np

from .model import Cohort

N_INTERVENTION = 791
N_STANDARD_OF_CARE = 394
N_EXTERNAL = 1000
COVARIATES = ("age", "ecog1", "ecog2", "log_psa")

# proportions of ECOG 0 / 1 / 2
_ECOG_TRIAL = (0.34, 0.55, 0.11)
_ECOG_EXTERNAL = (0.24, 0.57, 0.19)
# log hazard ratios for the covariates, per year of age and per unit log PSA
_LOG_HR = np.array([0.02, 0.25, 0.6, 0.3])
_TREATMENT_LOG_HR = np.log(0.85)
_BASE_RATE = 1 / 30  # events per month


def _covariates(rng, n, age_mean, ecog_p, psa_mean):
    ecog = rng.choice(3, size=n, p=ecog_p)
    return np.column_stack(
        [
            rng.normal(age_mean, 8.5, n) - 69,
            (ecog == 1).astype(float),
            (ecog == 2).astype(float),
            rng.normal(psa_mean, 1.2, n),
        ]
    )


def synthetic_case_study(seed: int = 0) -> tuple[Cohort, Cohort]:
    """Trial and external cohorts, times in months with administrative censoring at 60."""
    rng = np.random.default_rng(seed)
    n_trial = N_INTERVENTION + N_STANDARD_OF_CARE
    treat = np.zeros(n_trial, dtype=np.int8)
    treat[rng.permutation(n_trial)[:N_INTERVENTION]] = 1

    x_t = _covariates(rng, n_trial, 69, _ECOG_TRIAL, 3.5)
    x_e = _covariates(rng, N_EXTERNAL, 70, _ECOG_EXTERNAL, 3.9)

    def outcome(x, t, censor_rate, extra_log_hr):
        rate = _BASE_RATE * np.exp(x @ _LOG_HR + _TREATMENT_LOG_HR * t + extra_log_hr)
        fail = rng.exponential(1 / rate)
        cens = np.minimum(rng.exponential(1 / censor_rate, len(rate)), 60.0)
        return np.round(np.minimum(fail, cens), 2), fail <= cens

    time_t, status_t = outcome(x_t, treat, 0.01, 0.0)
    # unmeasured prognosis: real-world patients do worse than their covariates suggest
    time_e, status_e = outcome(x_e, 0, 0.02, 0.15)
    trial = Cohort(
        ids=[f"T{i:04d}" for i in range(n_trial)],
        covariates=x_t,
        external=np.zeros(n_trial, bool),
        treatment=treat,
        time=time_t,
        status=status_t,
        covariate_names=COVARIATES,
    )
    external = Cohort(
        ids=[f"E{i:04d}" for i in range(N_EXTERNAL)],
        covariates=x_e,
        external=np.ones(N_EXTERNAL, bool),
        treatment=np.zeros(N_EXTERNAL, np.int8),
        time=time_e,
        status=status_e,
        covariate_names=COVARIATES,
    )
    return trial, external


def main(argv=None) -> int:
    from .dataio import write_cohort_csv

    p = argparse.ArgumentParser(description="Write the synthetic case-study cohort as analysis CSV.")
    p.add_argument("out", help="output CSV path")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    write_cohort_csv(args.out, *synthetic_case_study(args.seed))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
