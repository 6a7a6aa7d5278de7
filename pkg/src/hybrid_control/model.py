"""Shared data model: subjects, cohorts, analysis sets and method results."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class Source(enum.Enum):
    TRIAL = "trial"
    EXTERNAL = "external"


class Treatment(enum.IntEnum):
    STANDARD_OF_CARE = 0
    INTERVENTION = 1


class Method(enum.Enum):
    TRIAL_ONLY = "trial_only"
    FULL_POOLING = "full_pooling"
    POWER_PRIOR = "power_prior"
    NORMALIZED_POWER_PRIOR = "npp"
    LIN = "lin"
    DAW = "daw"


class EstimationError(RuntimeError):
    """An analysis could not be carried out on the supplied data."""


class InsufficientExternals(EstimationError):
    pass


@dataclass(frozen=True)
class Subject:
    id: str
    covariates: tuple[float, ...]
    source: Source
    treatment: Treatment
    time: float
    status: bool


@dataclass(frozen=True)
class Violation:
    subject_id: str | None
    rule: str

    def __str__(self) -> str:
        who = "cohort" if self.subject_id is None else f"subject {self.subject_id}"
        return f"{who}: {self.rule}"


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Cohort:
    """Column-oriented collection of subjects.

    Subjects are stored as parallel arrays so the estimators can work on
    them without per-subject Python objects; ``subjects`` gives the row view.
    Arrays are read-only, so a cohort can be shared between workers.
    """

    ids: np.ndarray
    covariates: np.ndarray
    external: np.ndarray
    treatment: np.ndarray
    time: np.ndarray
    status: np.ndarray
    covariate_names: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.ids)
        cov = np.asarray(self.covariates, dtype=float)
        if cov.ndim == 1:
            cov = cov.reshape(n, -1)
        object.__setattr__(self, "ids", _frozen([str(i) for i in self.ids], object))
        object.__setattr__(self, "covariates", _frozen(cov, float))
        object.__setattr__(self, "external", _frozen(self.external, bool))
        object.__setattr__(self, "treatment", _frozen(self.treatment, np.int8))
        object.__setattr__(self, "time", _frozen(self.time, float))
        object.__setattr__(self, "status", _frozen(self.status, bool))
        names = tuple(self.covariate_names) or tuple(
            f"x{j + 1}" for j in range(self.covariates.shape[1])
        )
        object.__setattr__(self, "covariate_names", names)
        for name in ("covariates", "external", "treatment", "time", "status"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name!r} has length {len(getattr(self, name))}, expected {n}")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def k(self) -> int:
        return len(self.covariate_names)

    @property
    def subjects(self) -> list[Subject]:
        return [
            Subject(
                id=self.ids[i],
                covariates=tuple(float(v) for v in self.covariates[i]),
                source=Source.EXTERNAL if self.external[i] else Source.TRIAL,
                treatment=Treatment(int(self.treatment[i])),
                time=float(self.time[i]),
                status=bool(self.status[i]),
            )
            for i in range(len(self))
        ]

    @classmethod
    def from_subjects(cls, subjects: Iterable[Subject], covariate_names: Sequence[str]) -> "Cohort":
        subjects = list(subjects)
        k = len(covariate_names)
        cov = np.full((len(subjects), k), np.nan)
        for i, s in enumerate(subjects):
            # ragged rows are left NaN-padded/truncated here and reported by validate_cohort
            row = np.asarray(s.covariates, dtype=float)[:k]
            cov[i, : len(row)] = row
        cohort = cls(
            ids=[s.id for s in subjects],
            covariates=cov,
            external=[s.source is Source.EXTERNAL for s in subjects],
            treatment=[int(s.treatment) for s in subjects],
            time=[s.time for s in subjects],
            status=[s.status for s in subjects],
            covariate_names=tuple(covariate_names),
        )
        ragged = [s.id for s in subjects if len(s.covariates) != k]
        object.__setattr__(cohort, "_ragged", tuple(ragged))
        return cohort

    @classmethod
    def empty(cls, covariate_names: Sequence[str] = ()) -> "Cohort":
        k = len(covariate_names)
        return cls([], np.empty((0, k)), [], [], [], [], tuple(covariate_names))

    def take(self, index) -> "Cohort":
        """Sub-cohort selected by a boolean mask or integer index, order kept."""
        index = np.asarray(index)
        return Cohort(
            ids=self.ids[index],
            covariates=self.covariates[index],
            external=self.external[index],
            treatment=self.treatment[index],
            time=self.time[index],
            status=self.status[index],
            covariate_names=self.covariate_names,
        )

    def concat(self, other: "Cohort") -> "Cohort":
        if other.covariate_names != self.covariate_names:
            raise ValueError("cannot concatenate cohorts with different covariate schemas")
        return Cohort(
            ids=np.concatenate([self.ids, other.ids]),
            covariates=np.vstack([self.covariates, other.covariates]),
            external=np.concatenate([self.external, other.external]),
            treatment=np.concatenate([self.treatment, other.treatment]),
            time=np.concatenate([self.time, other.time]),
            status=np.concatenate([self.status, other.status]),
            covariate_names=self.covariate_names,
        )

    @property
    def n_events(self) -> int:
        return int(self.status.sum())


def validate_cohort(cohort: Cohort) -> list[Violation]:
    """Check every subject against the data model invariants.

    Returns an empty list when the cohort is valid. Violations are data, so
    nothing is raised here.
    """
    out: list[Violation] = []
    for sid in getattr(cohort, "_ragged", ()):
        out.append(Violation(sid, f"covariate vector must have length {cohort.k}"))
    seen: set[str] = set()
    for i, sid in enumerate(cohort.ids):
        t = cohort.time[i]
        if not np.isfinite(t):
            out.append(Violation(sid, "time must be finite"))
        elif t < 0:
            out.append(Violation(sid, "time ≥ 0"))
        if cohort.external[i] and cohort.treatment[i] != Treatment.STANDARD_OF_CARE:
            out.append(Violation(sid, "external subjects must receive standard of care"))
        if not np.all(np.isfinite(cohort.covariates[i])) and sid not in getattr(cohort, "_ragged", ()):
            out.append(Violation(sid, "covariates must be finite (missing values are not supported)"))
        if sid in seen:
            out.append(Violation(sid, "subject id must be unique"))
        seen.add(sid)
    return out


def split(cohort: Cohort) -> tuple[Cohort, Cohort, Cohort]:
    """Partition into (trial standard of care, trial intervention, external)."""
    ext = cohort.external
    treated = cohort.treatment == Treatment.INTERVENTION
    return (
        cohort.take(~ext & ~treated),
        cohort.take(~ext & treated),
        cohort.take(ext),
    )


@dataclass(frozen=True, eq=False)
class AnalysisSet:
    """Subjects paired with analysis weights; input to the weighted Cox fit."""

    cohort: Cohort
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights, float)
        if w.shape != (len(self.cohort),):
            raise ValueError("need exactly one weight per subject")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if np.any(w[~self.cohort.external] != 1.0):
            raise ValueError("trial subjects must carry weight 1")
        object.__setattr__(self, "weights", w)

    @property
    def ess(self) -> float:
        return float(self.weights.sum())

    @property
    def n_external_used(self) -> int:
        return int(np.count_nonzero(self.weights[self.cohort.external]))


Z_975 = 1.96


@dataclass(frozen=True)
class MethodResult:
    method: Method
    log_hr: float
    se: float
    ess: float
    n_external_used: int
    alpha_hat: float | None = None
    converged: bool = True
    note: str = ""
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def ci_low(self) -> float:
        return self.log_hr - Z_975 * self.se

    @property
    def ci_high(self) -> float:
        return self.log_hr + Z_975 * self.se

    @property
    def hr(self) -> float:
        return float(np.exp(self.log_hr))

    def rejects_null(self) -> bool:
        return self.ci_low > 0.0 or self.ci_high < 0.0

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high
