"""Schedule builders: adaptive (quantile-based) thresholds and general grids."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numba as nb
import numpy as np

from .core import Cohort, validate_cohort
from .kernel import ScheduleError, Stage, ThresholdSchedule


class DegenerateEndpointError(ValueError):
    """All observed times of an endpoint coincide, so no quantile exists."""


@dataclass(frozen=True)
class AdaptiveConfig:
    caliper: float = 0.20
    weights: tuple[float, ...] | None = None
    combined_calipers: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.caliper <= 1.0:
            raise ValueError(f"caliper must lie in [0, 1], got {self.caliper}")
        if self.weights is not None:
            w = tuple(float(x) for x in np.atleast_1d(self.weights))
            if any(not x > 0 for x in w):
                raise ValueError("weights must be positive")
            object.__setattr__(self, "weights", w)
        if self.combined_calipers is not None:
            cc = tuple(float(x) for x in self.combined_calipers)
            if not cc:
                raise ValueError("combined_calipers must not be empty")
            if any(not 0.0 <= c <= 1.0 for c in cc):
                raise ValueError("calipers must lie in [0, 1]")
            if any(b >= a for a, b in zip(cc, cc[1:])):
                raise ValueError("combined_calipers must be strictly decreasing")
            object.__setattr__(self, "combined_calipers", cc)

    def weights_for(self, n_events: int) -> tuple[float, ...]:
        if self.weights is None:
            return (1.0,) * n_events
        if len(self.weights) == 1 and n_events > 1:
            return self.weights * n_events
        if len(self.weights) != n_events:
            raise ValueError(f"need {n_events} weights, got {len(self.weights)}")
        return self.weights

    @property
    def calipers(self) -> tuple[float, ...]:
        return self.combined_calipers if self.combined_calipers is not None else (self.caliper,)


@nb.njit(cache=True)
def _nonzero_abs_diffs(x):
    n = x.shape[0]
    out = np.empty(n * (n - 1) // 2)
    m = 0
    for i in range(n - 1):
        xi = x[i]
        for j in range(i + 1, n):
            d = abs(xi - x[j])
            if d != 0.0:
                out[m] = d
                m += 1
    return out[:m]


def nonzero_differences(values) -> np.ndarray:
    """|x_i - x_j| over unordered pairs i < j, exact zeros dropped."""
    return _nonzero_abs_diffs(np.ascontiguousarray(values, dtype=np.float64))


@dataclass
class PooledDifferences:
    survival_diffs: np.ndarray
    event_diffs: list[np.ndarray]

    def for_endpoint(self, endpoint: int) -> np.ndarray:
        return self.survival_diffs if endpoint == 0 else self.event_diffs[endpoint - 1]


def pooled_differences(cohort: Cohort) -> PooledDifferences:
    """Non-zero absolute differences of observed times over all pairs.

    Arm and censoring status are ignored.
    """
    validate_cohort(cohort)
    if cohort.n < 2:
        raise ValueError("need at least two subjects")
    diffs = []
    for e, name in enumerate(cohort.endpoint_names):
        d = nonzero_differences(cohort.times[:, e])
        if d.size == 0:
            raise DegenerateEndpointError(f"degenerate endpoint: all {name} times are identical")
        diffs.append(d)
    return PooledDifferences(diffs[0], diffs[1:])


def _rank(c: float, m: int) -> int:
    # ceil(c * m) computed on the decimal value of c, so 0.1 * 30 gives 3
    r = math.ceil(Fraction(c).limit_denominator(10**9) * m)
    return min(max(r, 1), m)


def empirical_quantiles(diffs, calipers: Sequence[float]) -> list[float]:
    """Several quantiles of the same multiset with a single partition pass."""
    diffs = np.asarray(diffs, dtype=np.float64)
    m = diffs.size
    if m == 0:
        raise ValueError("empty multiset")
    for c in calipers:
        if not 0.0 <= c <= 1.0:
            raise ValueError(f"caliper must lie in [0, 1], got {c}")
    ranks = sorted({_rank(c, m) - 1 for c in calipers if c > 0})
    part = np.partition(diffs, ranks) if ranks else diffs
    return [0.0 if c == 0 else float(part[_rank(c, m) - 1]) for c in calipers]


def empirical_quantile(diffs, c: float) -> float:
    """The ceil(c*m)-th smallest element of a multiset of size m (0 for c = 0)."""
    return empirical_quantiles(diffs, [c])[0]


def adaptive_thresholds(cohort: Cohort, calipers: Sequence[float]) -> np.ndarray:
    """Quantiles per caliper (rows) and endpoint (columns), unweighted.

    Differences are generated and discarded one endpoint at a time.
    """
    validate_cohort(cohort)
    if cohort.n < 2:
        raise ValueError("need at least two subjects")
    q = np.empty((len(calipers), cohort.n_events + 1))
    for e, name in enumerate(cohort.endpoint_names):
        d = nonzero_differences(cohort.times[:, e])
        if d.size == 0:
            raise DegenerateEndpointError(f"degenerate endpoint: all {name} times are identical")
        q[:, e] = empirical_quantiles(d, calipers)
    return q


def adaptive_schedule(cohort: Cohort, config: AdaptiveConfig = AdaptiveConfig()) -> ThresholdSchedule:
    """Schedule with one adaptive block per caliper level, then a zero block.

    Within each block the survival threshold is the caliper quantile of the
    pooled survival differences, and nonfatal event k uses its quantile
    divided by ``weights[k]``.
    """
    k = cohort.n_events
    weights = np.array(config.weights_for(k))
    q = adaptive_thresholds(cohort, config.calipers)
    stages = []
    for row in q:
        stages.append(Stage(0, float(row[0])))
        stages.extend(Stage(e, float(row[e] / weights[e - 1])) for e in range(1, k + 1))
    stages.extend(Stage(e, 0.0) for e in range(k + 1))
    return ThresholdSchedule(tuple(stages), terminal_threshold=0.0)


@dataclass(frozen=True)
class AdaptiveBuilder:
    """Callable ``cohort -> schedule``; picklable, so usable across processes."""

    config: AdaptiveConfig = AdaptiveConfig()

    def __call__(self, cohort: Cohort) -> ThresholdSchedule:
        return adaptive_schedule(cohort, self.config)


def adaptive_builder(config: AdaptiveConfig = AdaptiveConfig()) -> AdaptiveBuilder:
    return AdaptiveBuilder(config)


def general_schedule(d_levels, t_levels, terminal_zero: bool = True) -> ThresholdSchedule:
    """Level-by-level schedule for survival and K nonfatal events.

    ``d_levels`` has L survival thresholds, ``t_levels`` is K x L.  Each
    endpoint's thresholds must be positive and strictly decreasing.
    """
    d = np.atleast_1d(np.asarray(d_levels, dtype=float))
    t = np.asarray(t_levels, dtype=float)
    if t.ndim == 1:
        t = t[None, :]
    if d.ndim != 1 or t.ndim != 2 or t.shape[1] != d.size or d.size == 0:
        raise ScheduleError(
            f"dimension mismatch: {d.size} survival levels vs nonfatal matrix {t.shape}"
        )
    for row in np.vstack([d, t]):
        if (row <= 0).any():
            raise ScheduleError("level thresholds must be > 0")
        if (np.diff(row) >= 0).any():
            raise ScheduleError("thresholds must be strictly decreasing across levels")
    n_events = t.shape[0]
    stages = []
    for level in range(d.size):
        stages.append(Stage(0, float(d[level])))
        stages.extend(Stage(k + 1, float(t[k, level])) for k in range(n_events))
    if terminal_zero:
        stages.extend(Stage(e, 0.0) for e in range(n_events + 1))
    return ThresholdSchedule(tuple(stages), 0.0 if terminal_zero else None)
