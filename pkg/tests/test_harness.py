import math

import numpy as np
import pytest

from hybrid_control.harness import DEFAULT_METHODS, replicate, run_scenario, summarize, sweep
from hybrid_control.simulation import Scenario

NULL = Scenario.preset(100, 0.67, 1.0, "strong", seed=11)
ALT = Scenario.preset(100, 0.67, 0.5, "mild", seed=11)


@pytest.fixture(scope="module")
def null_rows():
    return run_scenario(NULL, DEFAULT_METHODS, 40)


def test_row_order_and_counts(null_rows):
    assert [r.method for r in null_rows] == list(DEFAULT_METHODS)
    for r in null_rows:
        assert r.n_reps == 40 and r.n_failed + 40 - r.n_failed == 40
        assert 0 <= r.coverage <= 1 and 0 <= r.reject_rate <= 1 and r.emp_variance >= 0


def test_reject_is_one_minus_coverage_at_null(null_rows):
    for r in null_rows:
        assert r.true_log_hr == 0.0
        assert r.reject_rate == pytest.approx(1 - r.coverage, abs=1e-12)


def test_ess_identities(null_rows):
    ess = {r.method: r.mean_ess for r in null_rows}
    assert ess["trial_only"] == 100 and ess["full_pooling"] == 200
    assert ess["pp_0.25"] == 125 and ess["pp_0.5"] == 150 and ess["pp_0.75"] == 175


def test_single_rep_is_degenerate():
    rows = run_scenario(ALT, ["trial_only", "daw"], 1)
    assert all(r.emp_variance == 0.0 and r.degenerate for r in rows)


def test_sweep_deterministic_across_parallelism():
    a = sweep([NULL, ALT], ["trial_only", "lin", "daw"], 6, parallelism=1)
    b = sweep([NULL, ALT], ["trial_only", "lin", "daw"], 6, parallelism=2)
    assert [r.as_row() for r in a] == [r.as_row() for r in b]


def test_adding_scenarios_does_not_perturb_existing():
    alone = sweep([ALT], ["trial_only", "npp"], 5)
    together = sweep([NULL, ALT], ["trial_only", "npp"], 5)
    assert [r.as_row() for r in alone] == [r.as_row() for r in together[2:]]


def test_methods_share_replicate_data():
    t1, e1, _ = replicate(NULL, 3, ["trial_only"])
    t2, e2, _ = replicate(NULL, 3, ["daw", "lin", "trial_only"])
    np.testing.assert_array_equal(t1.time, t2.time)
    np.testing.assert_array_equal(e1.covariates, e2.covariates)


def test_empty_methods_and_grid():
    assert sweep([NULL], [], 3) == []
    with pytest.raises(ValueError):
        sweep([], ["trial_only"], 3)
    with pytest.raises(ValueError):
        sweep([NULL], ["bogus"], 3)


def test_failures_excluded_and_counted():
    values = np.array(
        [
            [0.1, 0.1, 10.0, np.nan, 1.0],
            [np.nan, np.nan, np.nan, np.nan, 0.0],
            [0.3, 0.1, 12.0, np.nan, 1.0],
        ]
    )
    s = summarize(NULL, "daw", values, 0.0)
    assert s.n_failed == 1 and s.mean_log_hr == pytest.approx(0.2)
    assert s.emp_variance == pytest.approx(0.02) and s.mean_ess == 11.0
    assert s.coverage == 0.5 and s.reject_rate == 0.5 and s.mean_alpha is None
    all_failed = summarize(NULL, "daw", values[[1]], 0.0)
    assert all_failed.n_failed == 1 and math.isnan(all_failed.bias) and all_failed.degenerate


def test_monte_carlo_error_bound():
    assert math.sqrt(0.25 / 1000) <= 0.016
