"""Run configuration for simulation sweeps (INI format).

Example::

    [grid]
    trial_sizes = 100, 1000
    treat_probs = 0.67
    conditional_hrs = 1, 0.875, 0.75, 0.5
    confounding = mild, strong

    [run]
    n_reps = 1000
    seed = 2023
    parallelism = 1
    methods = trial_only, full_pooling, power_prior, npp, lin, daw
    pp_alphas = 0.25, 0.5, 0.75

    [output]
    path = results.csv
    format = csv

Relative ``truth_fixture`` paths resolve against the config's directory,
the output path against the working directory.

``power_prior`` in the method list expands to one ``pp_<alpha>`` entry per
alpha, in place. The grid is the product confounding x trial size x
treat prob x HR, in that nesting order.
"""

from __future__ import annotations

import configparser
import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path

from .harness import check_methods
from .simulation import CONFOUNDING, Scenario

FORMATS = ("csv", "jsonl")

_SCHEMA = {
    "grid": {"trial_sizes", "treat_probs", "conditional_hrs", "confounding", "n_external"},
    "run": {"n_reps", "seed", "parallelism", "methods", "pp_alphas", "truth_fixture"},
    "output": {"path", "format"},
}
_REQUIRED = {
    "grid": ("trial_sizes", "treat_probs", "conditional_hrs", "confounding"),
    "run": ("n_reps",),
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the section, key and line."""


@dataclass(frozen=True)
class RunConfig:
    trial_sizes: tuple[int, ...]
    treat_probs: tuple[float, ...]
    conditional_hrs: tuple[float, ...]
    confounding: tuple[str, ...]
    n_reps: int
    seed: int = 0
    parallelism: int = 1
    methods: tuple[str, ...] = ()
    pp_alphas: tuple[float, ...] = (0.25, 0.5, 0.75)
    n_external: int | None = None
    truth_fixture: Path | None = None
    out_path: Path | None = None
    out_format: str = "csv"
    source: Path | None = field(default=None, compare=False)

    def grid(self) -> list[Scenario]:
        return [
            Scenario.preset(n, t, hr, conf, seed=self.seed, n_external=self.n_external)
            for conf, n, t, hr in itertools.product(
                self.confounding, self.trial_sizes, self.treat_probs, self.conditional_hrs
            )
        ]


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.fullmatch(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            lines[(section, "")] = i
            continue
        m = re.match(r"([^=:]+)[=:]", line)
        if m and section is not None:
            lines[(section, m.group(1).strip().lower())] = i
    return lines


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, lines, name: str):
        self.parser = parser
        self.lines = lines
        self.name = name

    def fail(self, section: str, key: str, why: str):
        line = self.lines.get((section, key))
        where = f"line {line}" if line else "missing"
        raise ConfigError(f"{self.name}: [{section}] {key} ({where}): {why}")

    def raw(self, section, key, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        if default is None and key in _REQUIRED.get(section, ()):
            self.fail(section, key, "required key is missing")
        return default

    def items(self, section, key, default=None) -> list[str]:
        value = self.raw(section, key, default)
        if value is None:
            return []
        parts = [p.strip() for p in value.replace("\n", ",").split(",")]
        parts = [p for p in parts if p]
        if not parts:
            self.fail(section, key, "empty list")
        return parts

    def ints(self, section, key, default=None, minimum=None) -> list[int]:
        out = []
        for p in self.items(section, key, default):
            try:
                v = int(p)
            except ValueError:
                self.fail(section, key, f"{p!r} is not an integer")
            if minimum is not None and v < minimum:
                self.fail(section, key, f"{v} is below the minimum {minimum}")
            out.append(v)
        return out

    def floats(self, section, key, default=None, lo=None, hi=None, open_lo=False, open_hi=False) -> list[float]:
        out = []
        for p in self.items(section, key, default):
            try:
                v = float(p)
            except ValueError:
                self.fail(section, key, f"{p!r} is not a number")
            bad = (
                v != v
                or (lo is not None and (v < lo or (open_lo and v == lo)))
                or (hi is not None and (v > hi or (open_hi and v == hi)))
            )
            if bad:
                self.fail(section, key, f"{p!r} is out of range")
            out.append(v)
        return out

    def one_int(self, section, key, default=None, minimum=None) -> int | None:
        values = self.ints(section, key, default, minimum)
        if len(values) > 1:
            self.fail(section, key, "expected a single integer")
        return values[0] if values else None


def parse_config(text: str, name: str = "<config>", base_dir: Path | None = None) -> RunConfig:
    """Parse and validate config text; raises :class:`ConfigError`."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=name)
    except configparser.Error as exc:
        raise ConfigError(f"{name}: {exc}") from None
    lines = _line_numbers(text)
    r = _Reader(parser, lines, name)

    for section in parser.sections():
        if section not in _SCHEMA:
            r.fail(section, "", "unknown section")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                r.fail(section, key, "unknown key")
    for section in _REQUIRED:
        if not parser.has_section(section):
            raise ConfigError(f"{name}: missing section [{section}]")

    confounding = r.items("grid", "confounding")
    for c in confounding:
        if c not in CONFOUNDING:
            r.fail("grid", "confounding", f"unknown preset {c!r} (known: {', '.join(sorted(CONFOUNDING))})")

    pp_alphas = r.floats("run", "pp_alphas", "0.25, 0.5, 0.75", lo=0.0, hi=1.0)
    methods: list[str] = []
    for m in r.items("run", "methods", "trial_only, full_pooling, power_prior, npp, lin, daw"):
        if m == "power_prior":
            methods.extend(f"pp_{a:g}" for a in pp_alphas)
        else:
            methods.append(m)
    try:
        check_methods(methods)
    except ValueError as exc:
        r.fail("run", "methods", str(exc))
    if len(set(methods)) != len(methods):
        r.fail("run", "methods", "duplicate method")

    fmt = r.raw("output", "format", "csv")
    if fmt not in FORMATS:
        r.fail("output", "format", f"{fmt!r} is not one of {', '.join(FORMATS)}")
    base = base_dir or Path(".")
    out = r.raw("output", "path", None)
    truth = r.raw("run", "truth_fixture", None)

    return RunConfig(
        trial_sizes=tuple(r.ints("grid", "trial_sizes", minimum=2)),
        treat_probs=tuple(r.floats("grid", "treat_probs", lo=0.0, hi=1.0, open_lo=True, open_hi=True)),
        conditional_hrs=tuple(r.floats("grid", "conditional_hrs", lo=0.0, open_lo=True)),
        confounding=tuple(confounding),
        n_reps=r.one_int("run", "n_reps", minimum=1),
        seed=r.one_int("run", "seed", "0", minimum=0),
        parallelism=r.one_int("run", "parallelism", "1", minimum=1),
        methods=tuple(methods),
        pp_alphas=tuple(pp_alphas),
        n_external=r.one_int("grid", "n_external", None, minimum=0),
        truth_fixture=None if truth is None else base / truth,
        out_path=None if out is None else Path(out),
        out_format=fmt,
        source=Path(name) if name != "<config>" else None,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path), base_dir=path.parent)
