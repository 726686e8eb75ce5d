"""Pairwise comparison functions and the staged win-loss score.

A schedule is an ordered list of ``(endpoint, threshold)`` stages.  A pair is
walked through the stages in order and the first stage that returns a
non-zero comparison decides it.  ``score_matrix`` runs the same logic over all
pairs of a cohort in a compiled loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba as nb
import numpy as np

from .core import SURVIVAL, Cohort, Subject, validate_cohort

INF = math.inf


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Stage:
    endpoint: int
    threshold: float

    def label(self, endpoint_names: Sequence[str] | None = None) -> str:
        name = endpoint_names[self.endpoint] if endpoint_names else f"endpoint{self.endpoint}"
        return f"{name}({self.threshold:g})"


@dataclass(frozen=True)
class ThresholdSchedule:
    """Ordered comparison stages.

    Per endpoint, thresholds must not increase over successive stages.  When
    ``terminal_threshold`` is not None, the last stage of every endpoint that
    appears must use exactly that threshold.
    """

    stages: tuple[Stage, ...]
    terminal_threshold: float | None = None

    def __post_init__(self):
        stages = tuple(s if isinstance(s, Stage) else Stage(int(s[0]), float(s[1])) for s in self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise ScheduleError("schedule needs at least one stage")
        last: dict[int, float] = {}
        for s in stages:
            if s.endpoint < 0:
                raise ScheduleError(f"invalid endpoint index {s.endpoint}")
            if math.isnan(s.threshold) or s.threshold < 0:
                raise ScheduleError(f"threshold must be >= 0, got {s.threshold}")
            if s.endpoint in last and s.threshold > last[s.endpoint]:
                raise ScheduleError(
                    f"thresholds for endpoint {s.endpoint} increase across stages "
                    f"({last[s.endpoint]:g} -> {s.threshold:g})"
                )
            last[s.endpoint] = s.threshold
        if self.terminal_threshold is not None:
            bad = {e: t for e, t in last.items() if t != self.terminal_threshold}
            if bad:
                raise ScheduleError(
                    f"final stage of endpoints {sorted(bad)} must use threshold "
                    f"{self.terminal_threshold:g}"
                )

    @classmethod
    def of(cls, *pairs, terminal_threshold: float | None = None) -> "ThresholdSchedule":
        """``ThresholdSchedule.of((0, 90), (1, 60), (0, 0), (1, 0))``"""
        return cls(tuple(Stage(int(e), float(t)) for e, t in pairs), terminal_threshold)

    def __len__(self) -> int:
        return len(self.stages)

    def __iter__(self):
        return iter(self.stages)

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([s.endpoint for s in self.stages], dtype=np.int64)

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([s.threshold for s in self.stages], dtype=np.float64)

    @property
    def max_endpoint(self) -> int:
        return max(s.endpoint for s in self.stages)

    def check_for(self, cohort: Cohort) -> None:
        if self.max_endpoint > cohort.n_events:
            raise ScheduleError(
                f"schedule uses endpoint {self.max_endpoint} but cohort has "
                f"{cohort.n_events} nonfatal event(s)"
            )

    def labels(self, endpoint_names: Sequence[str] | None = None) -> list[str]:
        return [s.label(endpoint_names) for s in self.stages]


def standard_schedule(n_events: int = 1) -> ThresholdSchedule:
    """Zero-threshold hierarchy: survival, then each nonfatal event in order."""
    return ThresholdSchedule(tuple(Stage(e, 0.0) for e in range(n_events + 1)), 0.0)


# -- per-pair comparisons -------------------------------------------------

def _compare(xa, ca, xb, cb, threshold) -> int:
    if not abs(xa - xb) >= threshold:
        return 0
    if not ca and not cb:
        return (xa > xb) - (xa < xb)
    if ca and not cb:
        return 1 if xa >= xb else 0
    if cb and not ca:
        return -1 if xa <= xb else 0
    return 0


def compare_survival(a: Subject, b: Subject, d: float) -> int:
    """Survival comparison of ``a`` against ``b`` at threshold ``d`` days."""
    if d < 0:
        raise ValueError("threshold must be >= 0")
    return _compare(a.survival_time, a.survival_censored, b.survival_time, b.survival_censored, d)


def compare_event(a: Subject, b: Subject, k: int, t: float) -> int:
    """Comparison on the k-th nonfatal event (k >= 1) at threshold ``t``."""
    if t < 0:
        raise ValueError("threshold must be >= 0")
    if not 1 <= k <= min(a.n_events, b.n_events):
        raise IndexError(f"nonfatal event index {k} out of range")
    return _compare(
        a.event_times[k - 1], a.event_censored[k - 1],
        b.event_times[k - 1], b.event_censored[k - 1], t,
    )


@dataclass(frozen=True)
class WinLossOutcome:
    score: int
    deciding_stage: int | None  # 1-based; None for a tie

    @property
    def is_tie(self) -> bool:
        return self.deciding_stage is None


TIE = WinLossOutcome(0, None)


def win_loss_score(a: Subject, b: Subject, schedule: ThresholdSchedule) -> WinLossOutcome:
    for s, stage in enumerate(schedule.stages, start=1):
        if stage.endpoint == SURVIVAL:
            u = compare_survival(a, b, stage.threshold)
        else:
            u = compare_event(a, b, stage.endpoint, stage.threshold)
        if u:
            return WinLossOutcome(u, s)
    return TIE


# -- compiled all-pairs sweep ---------------------------------------------

@nb.njit(cache=True, inline="always")
def _cmp(xa, ca, xb, cb, thr):
    diff = xa - xb
    if not abs(diff) >= thr:
        return 0
    if ca:
        if cb:
            return 0
        return 1 if diff >= 0.0 else 0
    if cb:
        return -1 if diff <= 0.0 else 0
    if diff > 0.0:
        return 1
    if diff < 0.0:
        return -1
    return 0


@nb.njit(cache=True)
def _sweep(times, censored, arm, ep, thr, pos, keep_pairs, pair_score, pair_stage):
    """Visit every unordered pair once.

    Returns per-subject win/loss counts over all other subjects, plus win and
    loss counts per stage over treatment-vs-control pairs (treated view).
    """
    n = times.shape[0]
    n_stages = ep.shape[0]
    wins = np.zeros(n, np.int64)
    losses = np.zeros(n, np.int64)
    stage_wins = np.zeros(n_stages, np.int64)
    stage_losses = np.zeros(n_stages, np.int64)
    for i in range(n - 1):
        for j in range(i + 1, n):
            u = 0
            s = 0
            while s < n_stages:
                e = ep[s]
                u = _cmp(times[i, e], censored[i, e], times[j, e], censored[j, e], thr[s])
                if u != 0:
                    break
                s += 1
            if u > 0:
                wins[i] += 1
                losses[j] += 1
            elif u < 0:
                losses[i] += 1
                wins[j] += 1
            if arm[i] != arm[j]:
                # treated perspective
                ut = u if arm[i] == 1 else -u
                if ut > 0:
                    stage_wins[s] += 1
                elif ut < 0:
                    stage_losses[s] += 1
                if keep_pairs:
                    if arm[i] == 1:
                        r, c = pos[i], pos[j]
                    else:
                        r, c = pos[j], pos[i]
                    pair_score[r, c] = ut
                    pair_stage[r, c] = s + 1 if ut != 0 else 0
    return wins, losses, stage_wins, stage_losses


@dataclass
class ScoreMatrix:
    """Result of scoring every pair of a cohort under one schedule.

    ``wins``/``losses`` count, for each subject, the other subjects (either
    arm) it beats / loses to.  ``stage_wins``/``stage_losses`` tally the
    treatment-vs-control pairs by the stage that decided them, from the
    treated subject's side.  ``pair_scores``/``pair_stages`` (treated rows,
    control columns) are filled only when requested; stage 0 marks a tie.
    """

    schedule: ThresholdSchedule
    arm: np.ndarray
    wins: np.ndarray
    losses: np.ndarray
    stage_wins: np.ndarray
    stage_losses: np.ndarray
    n_treated: int
    n_control: int
    treated_index: np.ndarray = field(repr=False)
    control_index: np.ndarray = field(repr=False)
    pair_scores: np.ndarray | None = field(default=None, repr=False)
    pair_stages: np.ndarray | None = field(default=None, repr=False)

    @property
    def net(self) -> np.ndarray:
        """Per-subject net score W_i - L_i."""
        return self.wins - self.losses

    @property
    def n(self) -> int:
        return self.wins.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.n_treated * self.n_control

    @property
    def treated_wins(self) -> int:
        return int(self.stage_wins.sum())

    @property
    def treated_losses(self) -> int:
        return int(self.stage_losses.sum())

    @property
    def ties(self) -> int:
        return self.n_pairs - self.treated_wins - self.treated_losses


def score_matrix(cohort: Cohort, schedule: ThresholdSchedule, keep_pairs: bool = False) -> ScoreMatrix:
    """Score all pairs of ``cohort`` under ``schedule``.

    Counts are integer-accumulated, so the result does not depend on subject
    order beyond the obvious permutation of per-subject entries.
    """
    validate_cohort(cohort)
    schedule.check_for(cohort)
    arm = cohort.arm
    treated = np.flatnonzero(arm == 1)
    control = np.flatnonzero(arm == 0)
    pos = np.empty(cohort.n, np.int64)
    pos[treated] = np.arange(treated.size)
    pos[control] = np.arange(control.size)
    if keep_pairs:
        pair_score = np.zeros((treated.size, control.size), np.int8)
        pair_stage = np.zeros((treated.size, control.size), np.int16)
    else:
        pair_score = np.zeros((0, 0), np.int8)
        pair_stage = np.zeros((0, 0), np.int16)
    wins, losses, sw, sl = _sweep(
        cohort.times, cohort.censored, arm, schedule.endpoints, schedule.thresholds,
        pos, keep_pairs, pair_score, pair_stage,
    )
    return ScoreMatrix(
        schedule=schedule,
        arm=arm,
        wins=wins,
        losses=losses,
        stage_wins=sw,
        stage_losses=sl,
        n_treated=int(treated.size),
        n_control=int(control.size),
        treated_index=treated,
        control_index=control,
        pair_scores=pair_score if keep_pairs else None,
        pair_stages=pair_stage if keep_pairs else None,
    )


def pairwise_outcomes(cohort: Cohort, schedule: ThresholdSchedule) -> Iterable[tuple[int, int, WinLossOutcome]]:
    """Yield ``(i, j, outcome)`` for every ordered pair i != j (slow path)."""
    subjects = cohort.subjects
    for i, a in enumerate(subjects):
        for j, b in enumerate(subjects):
            if i != j:
                yield i, j, win_loss_score(a, b, schedule)
