"""Synthetic trial and external cohorts with exponential survival times.

Trial covariates: X1 ~ Bern(0.5), X2 ~ Bern(0.6), X3 ~ N(60, 5) - 60,
X4 ~ N(21, 2) - 21. External: X1 ~ Bern(0.55), X2 ~ Bern(0.4),
X3 ~ N(60, 10) - 60, X4 ~ N(23, 2) - 21. Normal parameters are (mean, sd).

Failure times are exponential with rate exp(log(eta) T + sum_j log(beta_j) X_j)
(baseline rate 1); censoring is exponential with rate 0.1 in the trial and
0.4 externally.
"""

from __future__ import annotations

import functools
import json
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from .estimators import fit_weighted_cox
from .model import Cohort
from .streams import named_streams

COVARIATE_NAMES = ("x1", "x2", "x3", "x4")

CONFOUNDING = {
    "mild": (1.25, 0.67, 0.98, 1.06),
    "strong": (2.25, 0.4, 0.93, 1.21),
}


@dataclass(frozen=True)
class Scenario:
    n_trial: int
    treat_prob: float
    conditional_hr: float
    covariate_hrs: tuple[float, float, float, float]
    n_external: int | None = None
    censor_rate_trial: float = 0.1
    censor_rate_external: float = 0.4
    seed: int = 0
    confounding: str = field(default="custom", compare=False)

    def __post_init__(self):
        if self.n_external is None:
            object.__setattr__(self, "n_external", self.n_trial)
        object.__setattr__(self, "covariate_hrs", tuple(float(b) for b in self.covariate_hrs))
        if len(self.covariate_hrs) != 4:
            raise ValueError("need four covariate hazard ratios")
        if self.confounding == "custom":
            for name, hrs in CONFOUNDING.items():
                if self.covariate_hrs == hrs:
                    object.__setattr__(self, "confounding", name)
        if not 0 < self.treat_prob < 1:
            raise ValueError("treat_prob must lie in (0, 1)")
        rates = (self.conditional_hr, self.censor_rate_trial, self.censor_rate_external, *self.covariate_hrs)
        if min(rates) <= 0:
            raise ValueError("hazard ratios and censoring rates must be positive")
        if self.n_trial < 1 or self.n_external < 0:
            raise ValueError("cohort sizes must be positive")

    @classmethod
    def preset(cls, n_trial: int, treat_prob: float, conditional_hr: float, confounding: str, **kw) -> "Scenario":
        try:
            hrs = CONFOUNDING[confounding]
        except KeyError:
            raise ValueError(f"unknown confounding preset {confounding!r}; known: {sorted(CONFOUNDING)}") from None
        return cls(n_trial, treat_prob, conditional_hr, hrs, confounding=confounding, **kw)

    @property
    def key(self) -> str:
        """Canonical text identity (excludes the seed)."""
        d = asdict(self)
        d.pop("seed")
        d.pop("confounding")
        return json.dumps(d, sort_keys=True)

    @property
    def label(self) -> str:
        return (
            f"n{self.n_trial}_t{self.treat_prob:g}_hr{self.conditional_hr:g}_{self.confounding}"
        )

    def with_seed(self, seed: int) -> "Scenario":
        return Scenario(**{**asdict(self), "seed": int(seed)})


def _trial_covariates(rng, n):
    return np.column_stack(
        [
            rng.binomial(1, 0.5, n),
            rng.binomial(1, 0.6, n),
            rng.normal(60, 5, n) - 60,
            rng.normal(21, 2, n) - 21,
        ]
    ).astype(float)


def _external_covariates(rng, n):
    return np.column_stack(
        [
            rng.binomial(1, 0.55, n),
            rng.binomial(1, 0.4, n),
            rng.normal(60, 10, n) - 60,
            rng.normal(23, 2, n) - 21,
        ]
    ).astype(float)


def failure_rate(covariates, treatment, conditional_hr, covariate_hrs) -> np.ndarray:
    return np.exp(np.log(conditional_hr) * treatment + covariates @ np.log(covariate_hrs))


def generate(scenario: Scenario, seed=None) -> tuple[Cohort, Cohort]:
    """Draw one (trial, external) pair. ``seed`` defaults to ``scenario.seed``."""
    rng = named_streams(scenario.seed if seed is None else seed)
    n, m = scenario.n_trial, scenario.n_external
    x_trial = _trial_covariates(rng["covariates"], n)
    x_ext = _external_covariates(rng["covariates"], m)
    treat = (rng["treatment"].random(n) < scenario.treat_prob).astype(np.int8)

    f_trial = rng["failure"].exponential(1.0, n) / failure_rate(
        x_trial, treat, scenario.conditional_hr, scenario.covariate_hrs
    )
    f_ext = rng["failure"].exponential(1.0, m) / failure_rate(
        x_ext, 0, scenario.conditional_hr, scenario.covariate_hrs
    )
    c_trial = rng["censoring"].exponential(1.0 / scenario.censor_rate_trial, n)
    c_ext = rng["censoring"].exponential(1.0 / scenario.censor_rate_external, m)

    trial = Cohort(
        ids=[f"T{i:05d}" for i in range(n)],
        covariates=x_trial,
        external=np.zeros(n, bool),
        treatment=treat,
        time=np.minimum(f_trial, c_trial),
        status=f_trial <= c_trial,
        covariate_names=COVARIATE_NAMES,
    )
    external = Cohort(
        ids=[f"E{i:05d}" for i in range(m)],
        covariates=x_ext,
        external=np.ones(m, bool),
        treatment=np.zeros(m, np.int8),
        time=np.minimum(f_ext, c_ext),
        status=f_ext <= c_ext,
        covariate_names=COVARIATE_NAMES,
    )
    return trial, external


MARGINAL_SAMPLE = 2_000_000
MARGINAL_SEED = 20_230_101


def monte_carlo_marginal_log_hr(
    conditional_hr: float, covariate_hrs, n: int = MARGINAL_SAMPLE, seed: int = MARGINAL_SEED
) -> float:
    """Unadjusted Cox log-HR in a large censoring-free trial population.

    Half the sample (n/2 covariate draws) is assigned intervention and the
    same covariate draws are assigned standard of care for the other half,
    so the arms are exactly balanced.
    """
    rng = named_streams(seed)
    half = n // 2
    x = _trial_covariates(rng["covariates"], half)
    lin = x @ np.log(np.asarray(covariate_hrs, dtype=float))
    rate = np.exp(np.concatenate([lin + np.log(conditional_hr), lin]))
    times = rng["failure"].exponential(1.0, 2 * half) / rate
    treat = np.concatenate([np.ones(half), np.zeros(half)])
    return fit_weighted_cox(times, np.ones(2 * half), treat).log_hr


def _truth_key(conditional_hr, covariate_hrs) -> str:
    return f"{float(conditional_hr)!r}|" + ",".join(repr(float(b)) for b in covariate_hrs)


@functools.lru_cache(maxsize=None)
def _fixture() -> dict[str, float]:
    try:
        text = resources.files("hybrid_control.data").joinpath("marginal_truth.json").read_text()
    except FileNotFoundError:
        return {}
    return {row["key"]: row["marginal_log_hr"] for row in json.loads(text)}


_REGISTERED: dict[str, float] = {}


def register_truths(records) -> None:
    """Add marginal truths (as written by :func:`truth_record`) ahead of the shipped fixture."""
    for row in records:
        _REGISTERED[row["key"]] = float(row["marginal_log_hr"])
    _marginal.cache_clear()


@functools.lru_cache(maxsize=None)
def _marginal(conditional_hr: float, covariate_hrs: tuple) -> float:
    if conditional_hr == 1.0:
        # a null hazard ratio is collapsible
        return 0.0
    hit = _REGISTERED.get(_truth_key(conditional_hr, covariate_hrs))
    if hit is not None:
        return hit
    hit = _fixture().get(_truth_key(conditional_hr, covariate_hrs))
    if hit is not None:
        return hit
    return monte_carlo_marginal_log_hr(conditional_hr, covariate_hrs)


def true_marginal_log_hr(scenario: Scenario) -> float:
    """Marginal treatment log-HR for the trial population (cached per eta, beta)."""
    return _marginal(float(scenario.conditional_hr), tuple(scenario.covariate_hrs))


def truth_record(conditional_hr, covariate_hrs, value) -> dict:
    return {
        "key": _truth_key(conditional_hr, covariate_hrs),
        "conditional_hr": float(conditional_hr),
        "covariate_hrs": [float(b) for b in covariate_hrs],
        "marginal_log_hr": float(value),
        "marginal_hr": float(np.exp(value)),
        "n": MARGINAL_SAMPLE,
        "seed": MARGINAL_SEED,
    }
