"""Command-line front end: ``simulate``, ``analyze`` and ``oracle``.

Exit codes: 0 success, 2 invalid config, flags or input data, 3 estimation
failure in ``analyze``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

from . import harness
from .config import FORMATS, ConfigError, load_config
from .dataio import DataError, km_rows, read_cohort_csv, write_cohort_csv, write_rows
from .estimators import km_estimate
from .model import EstimationError, MethodResult
from .simulation import (
    CONFOUNDING,
    MARGINAL_SAMPLE,
    MARGINAL_SEED,
    Scenario,
    monte_carlo_marginal_log_hr,
    register_truths,
    true_marginal_log_hr,
    truth_record,
)
from .streams import lin_seed, replicate_seed

EXIT_OK, EXIT_USAGE, EXIT_ESTIMATION = 0, 2, 3

ALL_METHODS = ("trial_only", "full_pooling", "power_prior", "npp", "lin", "daw")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _fmt(x, spec=".3f") -> str:
    if x is None:
        return "-"
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return format(x, spec)


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) if i else h.ljust(w) for i, (h, w) in enumerate(zip(header, widths)))]
    for r in rows:
        lines.append("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))))
    return "\n".join(lines)


# simulate --------------------------------------------------------------------


def _dump_replicate(directory: Path, scenario: Scenario, methods) -> None:
    seq = replicate_seed(scenario.seed, scenario.key, 0)
    trial, external, results = harness.replicate(scenario, 0, methods)
    directory.mkdir(parents=True, exist_ok=True)
    write_cohort_csv(directory / f"{scenario.label}.csv", trial, external)
    meta = {
        "scenario": asdict(scenario),
        "replicate": 0,
        "lin_seed": lin_seed(seq),
        "results": {
            m: None
            if r is None
            else {
                "log_hr": r.log_hr,
                "se": r.se,
                "ess": r.ess,
                "n_external_used": r.n_external_used,
                "alpha_hat": r.alpha_hat,
            }
            for m, r in zip(methods, results)
        },
    }
    (directory / f"{scenario.label}.meta.json").write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    parallelism = cfg.parallelism if args.parallelism is None else args.parallelism
    fmt = args.format or cfg.out_format
    out = args.out or cfg.out_path
    if parallelism < 1:
        raise _UsageError("--parallelism must be at least 1")
    if cfg.truth_fixture is not None:
        register_truths(json.loads(Path(cfg.truth_fixture).read_text(encoding="utf-8")))

    grid = [s.with_seed(seed) for s in cfg.grid()]
    summaries = harness.sweep(grid, cfg.methods, cfg.n_reps, parallelism)
    rows = [s.as_row() for s in summaries]
    if out is not None:
        write_rows(out, rows, fmt)
    if args.dump_data is not None:
        for scenario in grid:
            _dump_replicate(Path(args.dump_data), scenario, cfg.methods)

    header = ["scenario", "method", "bias", "variance", "coverage", "reject", "ess", "alpha", "failed"]
    body = [
        [
            s.scenario.label,
            s.method,
            _fmt(s.bias, "+.4f"),
            _fmt(s.emp_variance, ".5f"),
            _fmt(s.coverage),
            _fmt(s.reject_rate),
            _fmt(s.mean_ess, ".1f"),
            _fmt(s.mean_alpha),
            str(s.n_failed),
        ]
        for s in summaries
    ]
    print(_table(header, body))
    if out is not None:
        print(f"\nwrote {len(rows)} rows to {out}")
    return EXIT_OK


# analyze ---------------------------------------------------------------------


def _split_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _analysis_row(name: str, r: MethodResult) -> dict:
    return {
        "method": name,
        "log_hr": r.log_hr,
        "se": r.se,
        "hr": r.hr,
        "ci_low": math.exp(r.ci_low),
        "ci_high": math.exp(r.ci_high),
        "ess": r.ess,
        "n_external_used": r.n_external_used,
        "alpha_hat": r.alpha_hat,
        "note": r.note,
    }


def cmd_analyze(args) -> int:
    try:
        alphas = [float(a) for a in _split_list(args.alpha)]
    except ValueError:
        raise _UsageError(f"--alpha must be a comma-separated list of numbers, got {args.alpha!r}") from None
    if not alphas or any(not 0 <= a <= 1 for a in alphas):
        raise _UsageError("--alpha values must lie in [0, 1]")
    methods = []
    for m in _split_list(args.methods):
        if m == "power_prior":
            methods.extend(f"pp_{a:g}" for a in alphas)
        else:
            methods.append(m)
    try:
        harness.check_methods(methods)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None

    data = read_cohort_csv(args.data)
    trial, external = data.trial, data.external
    results = harness.analyze_each(trial, external, methods, args.seed)

    rows, body, failures = [], [], []
    for name, r in zip(methods, results):
        if isinstance(r, Exception):
            failures.append(f"{name}: {type(r).__name__}: {r}")
            body.append([name, "failed", "-", "-", "-", "-"])
            continue
        rows.append(_analysis_row(name, r))
        ci = f"({_fmt(math.exp(r.ci_low))}, {_fmt(math.exp(r.ci_high))})"
        body.append([name, _fmt(r.hr), ci, _fmt(r.ess, ".1f"), str(r.n_external_used), _fmt(r.alpha_hat)])

    n_t = int(trial.treatment.sum())
    print(f"trial: {n_t} intervention, {len(trial) - n_t} standard of care; external: {len(external)}")
    print(_table(["method", "HR", "95% CI", "ESS", "externals", "alpha"], body))
    for f in failures:
        print(f"error: {f}", file=sys.stderr)

    if args.out is not None:
        write_rows(args.out, rows, args.format or "csv")
    if args.km is not None:
        groups = {
            "trial_intervention": trial.take(trial.treatment == 1),
            "trial_soc": trial.take(trial.treatment == 0),
            "external": external,
        }
        curves = {g: km_estimate(c.time, c.status) for g, c in groups.items() if len(c)}
        write_rows(args.km, km_rows(curves), "csv")
    return EXIT_ESTIMATION if failures else EXIT_OK


# oracle ----------------------------------------------------------------------


def _covariate_hrs(args) -> tuple[tuple[float, ...], str]:
    if args.betas is not None:
        try:
            betas = tuple(float(b) for b in _split_list(args.betas))
        except ValueError:
            raise _UsageError(f"--betas must be four comma-separated numbers, got {args.betas!r}") from None
        if len(betas) != 4 or min(betas) <= 0:
            raise _UsageError("--betas needs four positive hazard ratios")
        return betas, "custom"
    return CONFOUNDING[args.confounding], args.confounding


def cmd_oracle(args) -> int:
    if not args.hr > 0:
        raise _UsageError("--hr must be positive")
    if args.n < 2:
        raise _UsageError("--n must be at least 2")
    betas, name = _covariate_hrs(args)
    if args.n == MARGINAL_SAMPLE and args.seed == MARGINAL_SEED:
        value = true_marginal_log_hr(Scenario(100, 0.5, args.hr, betas))
    else:
        value = 0.0 if args.hr == 1 else monte_carlo_marginal_log_hr(args.hr, betas, n=args.n, seed=args.seed)
    marginal = math.exp(value)
    print(f"covariate HRs   {name} {betas}")
    print(f"conditional HR  {args.hr:.4f}")
    print(f"marginal HR     {marginal:.4f}")
    print(f"ratio           {marginal / args.hr:.4f}")

    if args.out is not None:
        record = truth_record(args.hr, betas, value)
        record.update(n=args.n, seed=args.seed)
        path = Path(args.out)
        records = json.loads(path.read_text(encoding="utf-8")) if path.exists() else []
        records = [r for r in records if r["key"] != record["key"]] + [record]
        path.write_text(json.dumps(records, indent=1) + "\n", encoding="utf-8")
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hybrid-control", description="Hybrid control arm borrowing methods and simulations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a Monte Carlo sweep from a config file")
    s.add_argument("--config", required=True, help="INI run configuration")
    s.add_argument("--out", type=Path, help="result table path (overrides the config)")
    s.add_argument("--format", choices=FORMATS, help="result table format (overrides the config)")
    s.add_argument("--seed", type=int, help="root seed (overrides the config)")
    s.add_argument("--parallelism", type=int, help="worker processes (overrides the config)")
    s.add_argument("--dump-data", type=Path, metavar="DIR", help="write replicate 0 of each scenario as analysis CSV")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="analyze a trial + external dataset")
    a.add_argument("data", type=Path, help="CSV with columns id,source,treatment,time,status,<covariates>")
    a.add_argument("--methods", default=",".join(ALL_METHODS), help="comma-separated methods (default: all)")
    a.add_argument("--alpha", default="0.25,0.5,0.75", help="power prior alphas (default: 0.25,0.5,0.75)")
    a.add_argument("--seed", type=int, default=0, help="seed for Lin's random draw")
    a.add_argument("--out", type=Path, help="write per-method results")
    a.add_argument("--format", choices=FORMATS, help="format for --out (default csv)")
    a.add_argument("--km", type=Path, help="write Kaplan-Meier curves per group as CSV")
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("oracle", help="marginal hazard ratio for a conditional one")
    o.add_argument("--hr", type=float, required=True, help="conditional treatment hazard ratio")
    g = o.add_mutually_exclusive_group()
    g.add_argument("--confounding", choices=sorted(CONFOUNDING), default="strong")
    g.add_argument("--betas", help="four comma-separated covariate hazard ratios")
    o.add_argument("--n", type=int, default=MARGINAL_SAMPLE, help="Monte Carlo sample size")
    o.add_argument("--seed", type=int, default=MARGINAL_SEED)
    o.add_argument("--out", type=Path, help="merge the result into this truth fixture (JSON)")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    raise SystemExit(main())
