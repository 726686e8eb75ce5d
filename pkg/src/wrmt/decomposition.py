"""Stage-level and endpoint-level win/tie/loss breakdowns.

Percentages are over the n1 * n0 treatment-vs-control pairs.  A stage's tie
percentage is the share of pairs still undecided after that stage, i.e. the
mass handed on to the next stage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Cohort, validate_cohort
from .inference import win_ratio_from_counts
from .kernel import ScoreMatrix, ThresholdSchedule, score_matrix


@dataclass(frozen=True)
class StageSummary:
    stage: int
    label: str
    endpoint: int
    threshold: float
    win_pct: float
    tie_pct: float
    loss_pct: float
    stage_win_ratio: float

    def row(self) -> dict:
        return {
            "Stage": self.label,
            "Win%": self.win_pct,
            "Tie%": self.tie_pct,
            "Loss%": self.loss_pct,
            "Stage-level win ratio": self.stage_win_ratio,
        }


@dataclass
class Decomposition:
    schedule: ThresholdSchedule
    endpoint_names: tuple[str, ...]
    stage_wins: np.ndarray
    stage_losses: np.ndarray
    n_pairs: int

    @property
    def ties(self) -> int:
        return self.n_pairs - int(self.stage_wins.sum()) - int(self.stage_losses.sum())

    @property
    def win_pct(self) -> np.ndarray:
        return 100.0 * self.stage_wins / self.n_pairs

    @property
    def loss_pct(self) -> np.ndarray:
        return 100.0 * self.stage_losses / self.n_pairs

    @property
    def tie_pct(self) -> np.ndarray:
        decided = np.cumsum(self.stage_wins + self.stage_losses)
        return 100.0 * (self.n_pairs - decided) / self.n_pairs

    @property
    def overall_win_ratio(self) -> float:
        return win_ratio_from_counts(int(self.stage_wins.sum()), int(self.stage_losses.sum()))

    def summaries(self) -> list[StageSummary]:
        return _summaries(self.schedule, self.endpoint_names, self.win_pct, self.tie_pct, self.loss_pct)


def _summaries(schedule, names, win, tie, loss) -> list[StageSummary]:
    labels = schedule.labels(names)
    return [
        StageSummary(s + 1, labels[s], st.endpoint, st.threshold,
                     float(win[s]), float(tie[s]), float(loss[s]),
                     win_ratio_from_counts(win[s], loss[s]))
        for s, st in enumerate(schedule.stages)
    ]


def decompose_scores(sm: ScoreMatrix, endpoint_names: Sequence[str]) -> Decomposition:
    if sm.n_pairs == 0:
        raise ValueError("decomposition needs both arms")
    return Decomposition(sm.schedule, tuple(endpoint_names), sm.stage_wins.copy(),
                         sm.stage_losses.copy(), sm.n_pairs)


def decompose(cohort: Cohort, schedule: ThresholdSchedule) -> list[StageSummary]:
    validate_cohort(cohort, require_both_arms=True)
    return decompose_scores(score_matrix(cohort, schedule), cohort.endpoint_names).summaries()


@dataclass
class AveragedDecomposition:
    """Element-wise mean of stage percentages over replicates."""

    schedule_shape: tuple[int, ...]
    labels: list[str]
    endpoints: list[int]
    endpoint_names: tuple[str, ...]
    win_pct: np.ndarray
    tie_pct: np.ndarray
    loss_pct: np.ndarray
    replicates: int

    def summaries(self) -> list[StageSummary]:
        return [
            StageSummary(s + 1, self.labels[s], self.endpoints[s], float("nan"),
                         float(self.win_pct[s]), float(self.tie_pct[s]), float(self.loss_pct[s]),
                         win_ratio_from_counts(self.win_pct[s], self.loss_pct[s]))
            for s in range(len(self.labels))
        ]


def average_decompositions(decomps: Sequence[Decomposition]) -> AveragedDecomposition:
    """Average percentage matrices; stage labels drop the (varying) thresholds."""
    if not decomps:
        raise ValueError("nothing to average")
    first = decomps[0]
    eps = [st.endpoint for st in first.schedule.stages]
    for d in decomps[1:]:
        if [st.endpoint for st in d.schedule.stages] != eps:
            raise ValueError("decompositions have different stage layouts")
    labels = [f"{first.endpoint_names[e]}[{s + 1}]" for s, e in enumerate(eps)]
    return AveragedDecomposition(
        schedule_shape=tuple(eps),
        labels=labels,
        endpoints=eps,
        endpoint_names=first.endpoint_names,
        win_pct=np.mean([d.win_pct for d in decomps], axis=0),
        tie_pct=np.mean([d.tie_pct for d in decomps], axis=0),
        loss_pct=np.mean([d.loss_pct for d in decomps], axis=0),
        replicates=len(decomps),
    )


def endpoint_rollup(summaries: Sequence[StageSummary], endpoint_names: Sequence[str] | None = None) -> dict:
    """Sum stage wins/losses per endpoint.

    Returns ``{"Overall": ratio, <endpoint name>: ratio, ...}`` with the
    endpoints in hierarchy order; the inputs may be counts or percentages.
    """
    wins: dict[int, float] = {}
    losses: dict[int, float] = {}
    for s in summaries:
        wins[s.endpoint] = wins.get(s.endpoint, 0.0) + s.win_pct
        losses[s.endpoint] = losses.get(s.endpoint, 0.0) + s.loss_pct
    out = {"Overall": win_ratio_from_counts(sum(wins.values()), sum(losses.values()))}
    for e in sorted(wins):
        name = endpoint_names[e] if endpoint_names else f"endpoint{e}"
        out[name] = win_ratio_from_counts(wins[e], losses[e])
    return out
