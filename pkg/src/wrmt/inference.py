"""Win ratio, the Finkelstein-Schoenfeld test and stratified aggregation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Union

import numpy as np

from .core import Cohort, CohortError, validate_cohort
from .kernel import ScoreMatrix, ThresholdSchedule, score_matrix

log = logging.getLogger(__name__)

ScheduleLike = Union[ThresholdSchedule, Callable[[Cohort], ThresholdSchedule]]


def win_ratio_from_counts(wins: int, losses: int) -> float:
    """wins / losses; ``inf`` when only wins, ``nan`` when neither."""
    if losses > 0:
        return wins / losses
    return math.inf if wins > 0 else math.nan


def win_ratio(sm: ScoreMatrix) -> float:
    """Treated wins over treated losses, counted on treatment-vs-control pairs."""
    return win_ratio_from_counts(sm.treated_wins, sm.treated_losses)


def two_sided_p(z: float) -> float:
    return min(1.0, max(0.0, math.erfc(abs(z) / math.sqrt(2.0))))


@dataclass
class TestResult:
    win_ratio: float
    statistic: float
    variance: float
    z_score: float
    p_value: float
    treated_wins: int
    treated_losses: int
    ties: int
    informative: bool = True

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return asdict(self)


def fs_test(sm: ScoreMatrix) -> TestResult:
    """Finkelstein-Schoenfeld test from a score matrix.

    S is the sum over treated subjects of W_i - L_i (counts taken over the
    whole cohort), with variance n1 n0 / (n (n - 1)) * sum_i (W_i - L_i)^2.
    """
    if sm.n_treated == 0 or sm.n_control == 0:
        raise CohortError("empty arm: both treatment and control subjects are required")
    n = sm.n
    net = sm.net
    stat = float(net[sm.arm == 1].sum())
    var = sm.n_treated * sm.n_control / (n * (n - 1)) * float(np.dot(net, net))
    return _result(stat, var, sm.treated_wins, sm.treated_losses, sm.ties)


def _result(stat, var, wins, losses, ties) -> TestResult:
    if var <= 0:
        return TestResult(win_ratio_from_counts(wins, losses), stat, 0.0, 0.0, 1.0,
                          wins, losses, ties, informative=False)
    z = stat / math.sqrt(var)
    return TestResult(win_ratio_from_counts(wins, losses), stat, var, z, two_sided_p(z),
                      wins, losses, ties)


def resolve_schedule(schedule: ScheduleLike, cohort: Cohort) -> ThresholdSchedule:
    return schedule if isinstance(schedule, ThresholdSchedule) else schedule(cohort)


def analyze(cohort: Cohort, schedule: ScheduleLike) -> TestResult:
    """Score ``cohort`` and run the test; ``schedule`` may be a builder."""
    validate_cohort(cohort, require_both_arms=True)
    return fs_test(score_matrix(cohort, resolve_schedule(schedule, cohort)))


@dataclass
class StratumResult:
    name: str
    n_treated: int
    n_control: int
    schedule: ThresholdSchedule
    result: TestResult


@dataclass
class StratifiedResult:
    result: TestResult
    strata: list[StratumResult]
    excluded: list[dict] = field(default_factory=list)
    thresholds_per_stratum: bool = False


def stratified_analysis(cohort: Cohort, schedule: ScheduleLike) -> StratifiedResult:
    """Within-stratum comparisons, summed across strata.

    A builder ``schedule`` is applied to each stratum separately, so adaptive
    thresholds come from that stratum's own pooled differences.  Strata
    lacking one of the arms are dropped and listed in ``excluded``.
    """
    validate_cohort(cohort)
    if cohort.strata is None:
        raise CohortError("cohort has no stratum labels")
    parts: list[StratumResult] = []
    excluded = []
    for name in cohort.stratum_names():
        sub = cohort.subset(cohort.strata == name)
        if sub.n_treated == 0 or sub.n_control == 0:
            msg = f"stratum {name!r} has a single arm and was excluded"
            log.warning(msg)
            excluded.append({"stratum": name, "n_treated": sub.n_treated,
                             "n_control": sub.n_control, "reason": msg})
            continue
        sched = resolve_schedule(schedule, sub)
        res = fs_test(score_matrix(sub, sched))
        parts.append(StratumResult(name, sub.n_treated, sub.n_control, sched, res))
    if not parts:
        raise CohortError("all strata were excluded (each lacks one of the arms)")
    combined = combine_strata([p.result for p in parts])
    return StratifiedResult(combined, parts, excluded,
                            thresholds_per_stratum=not isinstance(schedule, ThresholdSchedule))


def combine_strata(results: list[TestResult]) -> TestResult:
    wins = sum(r.treated_wins for r in results)
    losses = sum(r.treated_losses for r in results)
    ties = sum(r.ties for r in results)
    stat = math.fsum(r.statistic for r in results)
    var = math.fsum(r.variance for r in results)
    return _result(stat, var, wins, losses, ties)
