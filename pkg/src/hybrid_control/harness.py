"""Monte Carlo engine: replicate scenarios, run every method, summarize."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .methods import (
    analyze_daw,
    analyze_full_pooling,
    analyze_lin,
    analyze_npp,
    analyze_power_prior,
    analyze_trial_only,
    fit_on_trial_score,
)
from .model import Cohort, MethodResult
from .simulation import Scenario, generate, true_marginal_log_hr
from .streams import lin_seed, replicate_seed

log = logging.getLogger(__name__)

DEFAULT_METHODS = ("trial_only", "full_pooling", "pp_0.25", "pp_0.5", "pp_0.75", "npp", "lin", "daw")


@dataclass
class _ReplicateContext:
    trial: Cohort
    external: Cohort
    lin_seed: int
    _scores: tuple | None = None

    @property
    def scores(self):
        if self._scores is None:
            _, t, e = fit_on_trial_score(self.trial, self.external)
            self._scores = (t, e)
        return self._scores


def _resolve(name: str) -> Callable[[_ReplicateContext], MethodResult]:
    if name == "trial_only":
        return lambda c: analyze_trial_only(c.trial)
    if name == "full_pooling":
        return lambda c: analyze_full_pooling(c.trial, c.external)
    if name.startswith("pp_"):
        alpha = float(name[3:])
        if not 0 <= alpha <= 1:
            raise ValueError(f"power prior alpha out of range in {name!r}")
        return lambda c: analyze_power_prior(c.trial, c.external, alpha)
    if name == "npp":
        return lambda c: analyze_npp(c.trial, c.external)
    if name == "lin":
        return lambda c: analyze_lin(c.trial, c.external, rng=c.lin_seed, scores=c.scores)
    if name == "daw":
        return lambda c: analyze_daw(c.trial, c.external, external_scores=c.scores[1])
    raise ValueError(f"unknown method {name!r}")


def check_methods(methods: Sequence[str]) -> None:
    for m in methods:
        _resolve(m)


def analyze_each(trial: Cohort, external: Cohort, methods: Sequence[str], seed: int) -> list[MethodResult | Exception]:
    """Run each named method on one dataset, returning the exception of any that fails.

    ``seed`` feeds Lin's random draw (see :func:`hybrid_control.streams.lin_seed`).
    """
    ctx = _ReplicateContext(trial, external, seed)
    out: list[MethodResult | Exception] = []
    for name in methods:
        try:
            out.append(_resolve(name)(ctx))
        except Exception as exc:  # noqa: BLE001 - per-replicate failures are recorded, not fatal
            log.debug("method %s failed: %s", name, exc)
            out.append(exc)
    return out


def analyze_all(trial: Cohort, external: Cohort, methods: Sequence[str], seed: int) -> list[MethodResult | None]:
    """Like :func:`analyze_each`, with ``None`` marking a failed analysis."""
    return [r if isinstance(r, MethodResult) else None for r in analyze_each(trial, external, methods, seed)]


def replicate(scenario: Scenario, rep: int, methods: Sequence[str]):
    """Generate replicate ``rep`` of a scenario and analyze it with every method."""
    seq = replicate_seed(scenario.seed, scenario.key, rep)
    trial, external = generate(scenario, seq)
    results = analyze_all(trial, external, methods, lin_seed(seq))
    return trial, external, results


# per replicate, per method: log_hr, se, ess, alpha_hat, ok
_FIELDS = 5


def _run_chunk(args) -> tuple[int, int, np.ndarray]:
    index, scenario, methods, start, stop = args
    out = np.full((stop - start, len(methods), _FIELDS), np.nan)
    for r in range(start, stop):
        _, _, results = replicate(scenario, r, methods)
        for m, res in enumerate(results):
            if res is None or not res.converged or not math.isfinite(res.se):
                out[r - start, m, 4] = 0.0
                continue
            alpha = np.nan if res.alpha_hat is None else res.alpha_hat
            out[r - start, m] = (res.log_hr, res.se, res.ess, alpha, 1.0)
    return index, start, out


@dataclass(frozen=True)
class ScenarioSummary:
    scenario: Scenario
    method: str
    n_reps: int
    true_log_hr: float
    mean_log_hr: float
    bias: float
    emp_variance: float
    coverage: float
    reject_rate: float
    mean_ess: float
    mean_alpha: float | None
    n_failed: int
    degenerate: bool = False

    def as_row(self) -> dict:
        s = self.scenario
        return {
            "n_trial": s.n_trial,
            "n_external": s.n_external,
            "treat_prob": s.treat_prob,
            "conditional_hr": s.conditional_hr,
            "confounding": s.confounding,
            "seed": s.seed,
            "method": self.method,
            "n_reps": self.n_reps,
            "n_failed": self.n_failed,
            "true_log_hr": self.true_log_hr,
            "mean_log_hr": self.mean_log_hr,
            "bias": self.bias,
            "emp_variance": self.emp_variance,
            "coverage": self.coverage,
            "reject_rate": self.reject_rate,
            "mean_ess": self.mean_ess,
            "mean_alpha": self.mean_alpha,
            "degenerate": self.degenerate,
        }


Z = 1.96


def summarize(scenario: Scenario, method: str, values: np.ndarray, truth: float) -> ScenarioSummary:
    """Operating characteristics from the (n_reps, 5) array of one method."""
    n_reps = values.shape[0]
    ok = values[:, 4] == 1.0
    est, se, ess, alpha = values[ok, 0], values[ok, 1], values[ok, 2], values[ok, 3]
    n_ok = int(ok.sum())
    if n_ok == 0:
        nan = float("nan")
        return ScenarioSummary(scenario, method, n_reps, truth, nan, nan, nan, nan, nan, nan, None, n_reps, True)
    lo, hi = est - Z * se, est + Z * se
    mean = float(np.mean(est))
    var = float(np.var(est, ddof=1)) if n_ok > 1 else 0.0
    mean_alpha = None if np.all(np.isnan(alpha)) else float(np.nanmean(alpha))
    return ScenarioSummary(
        scenario=scenario,
        method=method,
        n_reps=n_reps,
        true_log_hr=truth,
        mean_log_hr=mean,
        bias=mean - truth,
        emp_variance=var,
        coverage=float(np.mean((lo <= truth) & (truth <= hi))),
        reject_rate=float(np.mean((lo > 0) | (hi < 0))),
        mean_ess=float(np.mean(ess)),
        mean_alpha=mean_alpha,
        n_failed=n_reps - n_ok,
        degenerate=n_ok < 2,
    )


def _chunks(n_reps: int, size: int):
    for start in range(0, n_reps, size):
        yield start, min(start + size, n_reps)


def simulate_grid(grid: Sequence[Scenario], methods: Sequence[str], n_reps: int, parallelism: int = 1, chunk: int = 50):
    """Raw per-replicate results, one (n_reps, n_methods, 5) array per scenario."""
    methods = list(methods)
    check_methods(methods)
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")
    tasks = [(i, s, methods, a, b) for i, s in enumerate(grid) for a, b in _chunks(n_reps, chunk)]
    raw = [np.full((n_reps, len(methods), _FIELDS), np.nan) for _ in grid]
    if parallelism <= 1:
        done = map(_run_chunk, tasks)
        for index, start, out in done:
            raw[index][start : start + len(out)] = out
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for index, start, out in pool.map(_run_chunk, tasks):
                raw[index][start : start + len(out)] = out
    return raw


def run_scenario(scenario: Scenario, methods: Sequence[str], n_reps: int, parallelism: int = 1) -> list[ScenarioSummary]:
    return sweep([scenario], methods, n_reps, parallelism)


def sweep(grid: Sequence[Scenario], methods: Sequence[str], n_reps: int, parallelism: int = 1) -> list[ScenarioSummary]:
    """Summaries in grid order x method order, independent of scheduling."""
    methods = list(methods)
    if not methods:
        return []
    if not grid:
        raise ValueError("empty scenario grid")
    raw = simulate_grid(grid, methods, n_reps, parallelism)
    rows = []
    for scenario, values in zip(grid, raw):
        truth = true_marginal_log_hr(scenario)
        rows.extend(summarize(scenario, m, values[:, j], truth) for j, m in enumerate(methods))
    return rows
