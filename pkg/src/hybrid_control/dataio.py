"""Reading and writing cohorts, result tables and Kaplan-Meier curves.

Floats are written with ``repr`` so every value survives a round trip
exactly. Parsing is locale independent: numbers must use a decimal point,
and NaN or infinite values are rejected.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import Cohort, validate_cohort

BASE_COLUMNS = ("id", "source", "treatment", "time", "status")
KM_COLUMNS = ("group", "time", "survival", "se", "ci_low", "ci_high")

_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")


class DataError(ValueError):
    """Malformed input data; ``line`` is the 1-based line in the file (header is line 1)."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def _number(text: str, what: str, line: int) -> float:
    text = text.strip()
    if not text:
        raise DataError(f"missing value for {what}", line)
    if not _NUMBER.fullmatch(text):
        raise DataError(f"{what} is not a finite decimal number: {text!r}", line)
    return float(text)


def _flag(text: str, what: str, line: int) -> int:
    text = text.strip()
    if text not in ("0", "1"):
        raise DataError(f"{what} must be 0 or 1, got {text!r}", line)
    return int(text)


@dataclass(frozen=True)
class Dataset:
    """A parsed analysis file, split into trial and external cohorts in file order."""

    trial: Cohort
    external: Cohort

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return self.trial.covariate_names


def parse_cohort_csv(text: str) -> Dataset:
    rows = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(rows)]
    except StopIteration:
        raise DataError("empty file", 1) from None
    if tuple(header[:5]) != BASE_COLUMNS:
        raise DataError(f"header must start with {','.join(BASE_COLUMNS)}", 1)
    names = tuple(header[5:])
    if len(set(header)) != len(header) or any(not n for n in names):
        raise DataError("covariate columns must have distinct, nonempty names", 1)

    groups = {"trial": ([], [], [], [], []), "external": ([], [], [], [], [])}
    line = 1
    for line, row in enumerate(rows, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, found {len(row)}", line)
        source = row[1].strip()
        if source not in groups:
            raise DataError(f"source must be 'trial' or 'external', got {source!r}", line)
        treatment = _flag(row[2], "treatment", line)
        time = _number(row[3], "time", line)
        if time < 0:
            raise DataError(f"time must be nonnegative, got {row[3].strip()!r}", line)
        status = _flag(row[4], "status", line)
        x = [_number(v, f"covariate {n!r}", line) for v, n in zip(row[5:], names)]
        if source == "external" and treatment != 0:
            raise DataError("external subjects must have treatment 0", line)
        ids, xs, ts, times, ss = groups[source]
        ids.append(row[0].strip())
        xs.append(x)
        ts.append(treatment)
        times.append(time)
        ss.append(status)

    def build(source):
        ids, xs, ts, times, ss = groups[source]
        n = len(ids)
        return Cohort(
            ids=ids,
            covariates=np.array(xs, dtype=float).reshape(n, len(names)),
            external=np.full(n, source == "external"),
            treatment=np.array(ts, dtype=np.int8),
            time=np.array(times, dtype=float),
            status=np.array(ss, dtype=bool),
            covariate_names=names,
        )

    data = Dataset(build("trial"), build("external"))
    problems = validate_cohort(data.trial.concat(data.external))
    if problems:
        raise DataError("; ".join(str(p) for p in problems[:5]))
    return data


def read_cohort_csv(path) -> Dataset:
    return parse_cohort_csv(Path(path).read_text(encoding="utf-8"))


def cohort_rows(trial: Cohort, external: Cohort) -> Iterable[list[str]]:
    yield [*BASE_COLUMNS, *trial.covariate_names]
    for cohort, source in ((trial, "trial"), (external, "external")):
        for i in range(len(cohort)):
            yield [
                str(cohort.ids[i]),
                source,
                str(int(cohort.treatment[i])),
                repr(float(cohort.time[i])),
                str(int(cohort.status[i])),
                *(repr(float(v)) for v in cohort.covariates[i]),
            ]


def write_cohort_csv(path, trial: Cohort, external: Cohort) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(cohort_rows(trial, external))


# result tables ---------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def format_rows(rows: Sequence[dict], fmt: str) -> str:
    """Serialize dict rows (all sharing one key order) as CSV or JSON lines."""
    if fmt == "jsonl":
        return "".join(json.dumps({k: _json_value(v) for k, v in r.items()}) + "\n" for r in rows)
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(rows[0].keys())
    for r in rows:
        w.writerow(_cell(v) for v in r.values())
    return buf.getvalue()


def write_rows(path, rows: Sequence[dict], fmt: str) -> None:
    Path(path).write_text(format_rows(rows, fmt), encoding="utf-8")


_INT_FIELDS = {"n_trial", "n_external", "seed", "n_reps", "n_failed", "n_external_used"}
_STR_FIELDS = {"confounding", "method", "label", "note"}
_BOOL_FIELDS = {"degenerate", "converged"}


def _typed(key: str, text: str):
    if text == "":
        return None
    if key in _STR_FIELDS:
        return text
    if key in _BOOL_FIELDS:
        return text == "true"
    if key in _INT_FIELDS:
        return int(text)
    return float(text)


def parse_rows(text: str, fmt: str) -> list[dict]:
    """Inverse of :func:`format_rows` for the result tables written here."""
    if fmt == "jsonl":
        out = []
        for line in text.splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            # non-finite floats travel as strings ("nan", "inf")
            out.append({k: float(v) if isinstance(v, str) and k not in _STR_FIELDS else v for k, v in row.items()})
        return out
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _typed(k, v) for k, v in row.items()} for row in reader]


def read_rows(path, fmt: str | None = None) -> list[dict]:
    path = Path(path)
    fmt = fmt or ("jsonl" if path.suffix == ".jsonl" else "csv")
    return parse_rows(path.read_text(encoding="utf-8"), fmt)


def km_rows(curves: dict) -> list[dict]:
    """Step points of named :class:`~hybrid_control.estimators.KmCurve` objects.

    Each group starts with its (0, 1) point.
    """
    rows = []
    for group, c in curves.items():
        rows.append(dict(group=group, time=0.0, survival=1.0, se=0.0, ci_low=1.0, ci_high=1.0))
        for t, s, se, lo, hi in zip(c.event_times, c.survival, c.greenwood_se, c.ci_low, c.ci_high):
            rows.append(dict(group=group, time=float(t), survival=float(s), se=float(se), ci_low=float(lo), ci_high=float(hi)))
    return rows
