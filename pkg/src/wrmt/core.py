"""Subjects, cohorts and the censoring conventions shared by every module.

Internally a censoring flag of ``True`` means the event was *not* observed.
A cohort keeps its data column-wise in numpy arrays; ``Subject`` objects are
produced on demand for per-pair inspection.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

SURVIVAL = 0


class CohortError(ValueError):
    """Raised when a cohort violates one of its structural invariants."""


@dataclass(frozen=True)
class Subject:
    id: object
    arm: int
    survival_time: float
    survival_censored: bool
    event_times: tuple[float, ...]
    event_censored: tuple[bool, ...]

    @property
    def n_events(self) -> int:
        return len(self.event_times)

    def time(self, endpoint: int) -> float:
        """Observed time for endpoint index 0 (survival) or k >= 1."""
        if endpoint == SURVIVAL:
            return self.survival_time
        return self.event_times[endpoint - 1]

    def censored(self, endpoint: int) -> bool:
        if endpoint == SURVIVAL:
            return self.survival_censored
        return self.event_censored[endpoint - 1]


def default_endpoint_names(n_events: int) -> tuple[str, ...]:
    if n_events == 1:
        return ("survival", "event1")
    return ("survival",) + tuple(f"event{k}" for k in range(1, n_events + 1))


class Cohort:
    """A set of subjects stored as aligned arrays.

    Attributes
    ----------
    ids : ndarray, shape (n,)
    arm : ndarray of int8, shape (n,)
        1 for treatment, 0 for control.
    times : ndarray of float64, shape (n, K + 1)
        Column 0 holds the survival time, columns 1..K the nonfatal events.
    censored : ndarray of bool, shape (n, K + 1)
    strata : ndarray of str or None
    endpoint_names : tuple of str, length K + 1
    """

    def __init__(
        self,
        subjects: Iterable[Subject],
        stratum_labels: Sequence[object] | None = None,
        endpoint_names: Sequence[str] | None = None,
    ):
        subjects = tuple(subjects)
        if not subjects:
            raise CohortError("cohort has no subjects")
        ks = {len(s.event_times) for s in subjects}
        if len(ks) != 1 or any(len(s.event_censored) != len(s.event_times) for s in subjects):
            raise CohortError("heterogeneous endpoint count")
        k = ks.pop()
        if k < 1:
            raise CohortError("at least one nonfatal event is required")
        times = np.empty((len(subjects), k + 1))
        censored = np.empty((len(subjects), k + 1), dtype=bool)
        for row, s in enumerate(subjects):
            times[row, 0] = s.survival_time
            times[row, 1:] = s.event_times
            censored[row, 0] = s.survival_censored
            censored[row, 1:] = s.event_censored
        self._init_arrays(
            ids=np.array([s.id for s in subjects], dtype=object),
            arm=np.array([s.arm for s in subjects]),
            times=times,
            censored=censored,
            strata=stratum_labels,
            endpoint_names=endpoint_names,
        )
        self.__dict__["subjects"] = subjects

    @classmethod
    def from_arrays(
        cls,
        arm,
        times,
        censored,
        ids=None,
        strata=None,
        endpoint_names=None,
    ) -> "Cohort":
        """Build a cohort straight from column arrays (no per-subject objects)."""
        self = cls.__new__(cls)
        times = np.asarray(times, dtype=float)
        if times.ndim != 2 or times.shape[1] < 2:
            raise CohortError("times must have shape (n, K + 1) with K >= 1")
        if ids is None:
            ids = np.arange(times.shape[0])
        self._init_arrays(
            ids=np.asarray(ids, dtype=object),
            arm=np.asarray(arm),
            times=times,
            censored=np.asarray(censored, dtype=bool),
            strata=strata,
            endpoint_names=endpoint_names,
        )
        return self

    def _init_arrays(self, ids, arm, times, censored, strata, endpoint_names):
        n = times.shape[0]
        if arm.shape != (n,) or ids.shape != (n,) or censored.shape != times.shape:
            raise CohortError("column arrays have inconsistent shapes")
        if not np.isin(arm, (0, 1)).all():
            raise CohortError("arm must be 0 (control) or 1 (treatment)")
        self.ids = ids
        self.arm = arm.astype(np.int8)
        self.times = np.ascontiguousarray(times, dtype=np.float64)
        self.censored = np.ascontiguousarray(censored, dtype=bool)
        if strata is not None:
            labels = list(strata)
            if len(labels) != n:
                raise CohortError("stratum labels must have one entry per subject")
            missing = [lab is None or (isinstance(lab, str) and lab == "") for lab in labels]
            if any(missing):
                if all(missing):
                    strata = None
                else:
                    raise CohortError(
                        "stratum labels present for some but not all subjects"
                    )
            else:
                strata = np.array([str(lab) for lab in labels], dtype=object)
        self.strata = strata
        k = times.shape[1] - 1
        if endpoint_names is None:
            endpoint_names = default_endpoint_names(k)
        endpoint_names = tuple(endpoint_names)
        if len(endpoint_names) != k + 1:
            raise CohortError(f"expected {k + 1} endpoint names, got {len(endpoint_names)}")
        self.endpoint_names = endpoint_names
        for a in (self.ids, self.arm, self.times, self.censored):
            a.flags.writeable = False

    @property
    def n(self) -> int:
        return self.times.shape[0]

    @property
    def n_events(self) -> int:
        return self.times.shape[1] - 1

    @property
    def n_treated(self) -> int:
        return int(self.arm.sum())

    @property
    def n_control(self) -> int:
        return self.n - self.n_treated

    @cached_property
    def subjects(self) -> tuple[Subject, ...]:
        return tuple(self.subject(i) for i in range(self.n))

    def subject(self, i: int) -> Subject:
        return Subject(
            id=self.ids[i],
            arm=int(self.arm[i]),
            survival_time=float(self.times[i, 0]),
            survival_censored=bool(self.censored[i, 0]),
            event_times=tuple(float(t) for t in self.times[i, 1:]),
            event_censored=tuple(bool(c) for c in self.censored[i, 1:]),
        )

    def __len__(self) -> int:
        return self.n

    def subset(self, mask) -> "Cohort":
        """Cohort restricted to a boolean mask or index array, order kept."""
        idx = np.arange(self.n)[mask]
        return Cohort.from_arrays(
            arm=self.arm[idx],
            times=self.times[idx],
            censored=self.censored[idx],
            ids=self.ids[idx],
            strata=None if self.strata is None else self.strata[idx],
            endpoint_names=self.endpoint_names,
        )

    def stratum_names(self) -> list[str]:
        if self.strata is None:
            return []
        return list(dict.fromkeys(self.strata))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cohort):
            return NotImplemented
        same_strata = (self.strata is None and other.strata is None) or (
            self.strata is not None
            and other.strata is not None
            and list(self.strata) == list(other.strata)
        )
        return (
            same_strata
            and self.endpoint_names == other.endpoint_names
            and list(self.ids) == list(other.ids)
            and np.array_equal(self.arm, other.arm)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.censored, other.censored)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"Cohort(n={self.n}, treated={self.n_treated}, control={self.n_control}, "
            f"endpoints={self.endpoint_names}, stratified={self.strata is not None})"
        )


def validate_cohort(cohort: Cohort, require_both_arms: bool = False) -> Cohort:
    """Check the cohort invariants and return the cohort unchanged.

    Raises CohortError on negative or non-finite times, or, when
    ``require_both_arms`` is set, if either arm is empty.
    """
    if not isinstance(cohort, Cohort):
        raise CohortError("expected a Cohort")
    if np.isnan(cohort.times).any():
        raise CohortError("missing (NaN) time")
    if (cohort.times < 0).any():
        row = int(np.argwhere(cohort.times < 0)[0, 0])
        raise CohortError(f"negative time (subject {cohort.ids[row]!r})")
    if not np.isfinite(cohort.times).all():
        raise CohortError("infinite time")
    if require_both_arms and (cohort.n_treated == 0 or cohort.n_control == 0):
        raise CohortError("empty arm: both treatment and control subjects are required")
    return cohort
