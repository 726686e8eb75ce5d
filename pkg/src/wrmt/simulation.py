"""Gumbel-Hougaard copula simulator and the replicated power harness.

Latent (death, hospitalization) times share a Gumbel-Hougaard copula with
exponential margins.  Hazards are ``lambda * exp(-alpha * arm)``, so a
positive ``alpha`` lengthens times in the treatment arm.  Observation applies
administrative censoring at the follow-up day; by default a hospitalization
that would fall after death is censored at the observed death day.
"""

from __future__ import annotations

import logging
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Cohort
from .decomposition import AveragedDecomposition, average_decompositions, decompose_scores
from .inference import ScheduleLike, fs_test, resolve_schedule
from .kernel import score_matrix, standard_schedule
from .thresholds import AdaptiveBuilder, AdaptiveConfig

log = logging.getLogger(__name__)

EFFECT_SIZES = {"None": 0.0, "Very weak": 0.1, "Weak": 0.2, "Modest": 0.3}
CONCORDANCE_BETA = {0.0: 1.0, 0.5: 2.0}


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 2000
    lambda_d: float = 0.0008
    lambda_t1: float = 0.0022
    alpha_d: float = 0.0
    alpha_t1: float = 0.0
    beta: float = 1.0
    follow_up: float = 1000.0
    seed: int = 0
    name: str = "custom"
    # "death": hospitalization after death is censored at min(D*, FU);
    # "followup": it is censored at FU instead
    no_event_censoring: str = "death"

    def __post_init__(self):
        if self.beta < 1:
            raise ValueError("copula parameter beta must be >= 1")
        if self.lambda_d <= 0 or self.lambda_t1 <= 0:
            raise ValueError("hazards must be positive")
        if self.n < 2 or self.n % 2:
            raise ValueError("n must be a positive even number (equal allocation)")
        if self.follow_up <= 0:
            raise ValueError("follow_up must be positive")
        if self.no_event_censoring not in ("death", "followup"):
            raise ValueError("no_event_censoring must be 'death' or 'followup'")

    @property
    def kendall_tau(self) -> float:
        return 1.0 - 1.0 / self.beta

    def hazards(self, arm):
        arm = np.asarray(arm, dtype=float)
        return (self.lambda_d * np.exp(-self.alpha_d * arm),
                self.lambda_t1 * np.exp(-self.alpha_t1 * arm))


def _scenario(alpha_d, alpha_t1, tau):
    return {"alpha_d": EFFECT_SIZES[alpha_d], "alpha_t1": EFFECT_SIZES[alpha_t1],
            "beta": CONCORDANCE_BETA[tau]}


# (survival effect, hospitalization effect, Kendall's tau)
SCENARIOS: dict[str, dict] = {
    "S0": _scenario("None", "None", 0.0),
    "S0-tau0.5": _scenario("None", "None", 0.5),
    "S1": _scenario("None", "Modest", 0.5),
    "S2": _scenario("None", "Modest", 0.0),
    "S3": _scenario("Modest", "None", 0.5),
    "S4": _scenario("Modest", "None", 0.0),
    "S5": _scenario("Very weak", "Weak", 0.5),
    "S6": _scenario("Very weak", "Weak", 0.0),
    "S7": _scenario("Weak", "Very weak", 0.5),
    "S8": _scenario("Weak", "Very weak", 0.0),
    "S9": _scenario("Weak", "None", 0.5),
    "S10": _scenario("Weak", "None", 0.0),
    "S11": _scenario("Weak", "Weak", 0.5),
    "S12": _scenario("Weak", "Weak", 0.0),
    "S13": _scenario("Weak", "Modest", 0.5),
    "S14": _scenario("Weak", "Modest", 0.0),
    "S15": _scenario("Very weak", "Very weak", 0.5),
    "S16": _scenario("Very weak", "Very weak", 0.0),
}


def scenario(name: str, follow_up: float = 1000.0, **overrides) -> ScenarioConfig:
    """Catalog preset ``name`` at the given follow-up, with field overrides."""
    try:
        params = SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}") from None
    return ScenarioConfig(name=name, follow_up=follow_up, **{**params, **overrides})


# -- sampling ---------------------------------------------------------------

def positive_stable(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    """Positive stable draws with Laplace transform exp(-s**alpha), 0 < alpha <= 1.

    Chambers-Mallows-Stuck / Kanter representation.
    """
    if alpha == 1.0:
        return np.ones(size)
    u = rng.uniform(0.0, np.pi, size)
    w = rng.standard_exponential(size)
    return (np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)
            * (np.sin((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha))


def gumbel_uniforms(beta: float, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Survival-copula pairs; returns -log(U1), -log(U2) to avoid underflow."""
    e1 = rng.standard_exponential(size)
    e2 = rng.standard_exponential(size)
    if beta == 1.0:
        return e1, e2
    v = positive_stable(1.0 / beta, size, rng)
    return (e1 / v) ** (1.0 / beta), (e2 / v) ** (1.0 / beta)


def sample_latent(arm, config: ScenarioConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Latent (death, hospitalization) days for each entry of ``arm``."""
    arm = np.atleast_1d(arm)
    h_d, h_t = config.hazards(arm)
    x1, x2 = gumbel_uniforms(config.beta, arm.size, rng)
    return x1 / h_d, x2 / h_t


def sample_latent_pair(arm: int, config: ScenarioConfig, rng: np.random.Generator) -> tuple[float, float]:
    d, t = sample_latent(np.array([arm]), config, rng)
    return float(d[0]), float(t[0])


def apply_observation_scheme(d_star, t_star, follow_up: float, no_event_censoring: str = "death"):
    """Observed (D, D censored, T1, T1 censored) from latent times.

    Works elementwise on scalars or arrays.
    """
    d_star = np.asarray(d_star, dtype=float)
    t_star = np.asarray(t_star, dtype=float)
    d_obs = np.minimum(d_star, follow_up)
    d_cens = d_star > follow_up
    # latent hospitalization at or after latent death never happens
    t_cens = (t_star >= d_star) | (t_star > follow_up)
    limit = d_obs if no_event_censoring == "death" else np.full_like(d_obs, follow_up)
    t_obs = np.where(t_cens, limit, t_star)
    if d_obs.ndim == 0:
        return float(d_obs), bool(d_cens), float(t_obs), bool(t_cens)
    return d_obs, d_cens, t_obs, t_cens


def make_rng(*key: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by a tuple of integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


def simulate_cohort(config: ScenarioConfig, rng: np.random.Generator | None = None) -> Cohort:
    """Equal allocation: first n/2 subjects treated, the rest control."""
    if rng is None:
        rng = make_rng(config.seed)
    half = config.n // 2
    arm = np.repeat(np.array([1, 0], dtype=np.int8), half)
    d_star, t_star = sample_latent(arm, config, rng)
    d, dc, t, tc = apply_observation_scheme(d_star, t_star, config.follow_up, config.no_event_censoring)
    return Cohort.from_arrays(
        arm=arm,
        times=np.column_stack([d, t]),
        censored=np.column_stack([dc, tc]),
        endpoint_names=("survival", "hospitalization"),
    )


# -- study harness ----------------------------------------------------------

def scenario_code(name: str) -> int:
    return zlib.crc32(name.encode())


def replicate_seed(master_seed: int, name: str, follow_up: float, replicate: int) -> tuple[int, ...]:
    return (int(master_seed), scenario_code(name), int(round(follow_up * 1000)), int(replicate))


Method = tuple[str, ScheduleLike]


def default_methods() -> list[Method]:
    return [("WR", standard_schedule(1)), ("WR-AT", AdaptiveBuilder(AdaptiveConfig()))]


@dataclass
class CellResult:
    scenario: str
    follow_up: float
    method: str
    replicates: int
    rejections: int
    mean_win_ratio: float
    master_seed: int
    decomposition: AveragedDecomposition | None = None

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.replicates


@dataclass
class StudyResult:
    cells: list[CellResult] = field(default_factory=list)
    alpha: float = 0.05

    def cell(self, scenario: str, follow_up: float, method: str) -> CellResult:
        for c in self.cells:
            if c.scenario == scenario and c.follow_up == follow_up and c.method == method:
                return c
        raise KeyError((scenario, follow_up, method))

    def rate(self, scenario: str, follow_up: float, method: str) -> float:
        return self.cell(scenario, follow_up, method).rejection_rate

    def long_rows(self) -> list[dict]:
        rows = []
        for c in self.cells:
            base = {"scenario": c.scenario, "FU": c.follow_up, "method": c.method,
                    "replicates": c.replicates, "seed": c.master_seed}
            rows.append({**base, "metric": "rejection_rate", "value": c.rejection_rate})
            rows.append({**base, "metric": "mean_win_ratio", "value": c.mean_win_ratio})
            if c.decomposition is not None:
                d = c.decomposition
                for s in range(len(d.labels)):
                    for metric, arr in (("win_pct", d.win_pct), ("tie_pct", d.tie_pct),
                                        ("loss_pct", d.loss_pct)):
                        rows.append({**base, "metric": f"stage{s + 1}_{metric}", "value": float(arr[s])})
        return rows


def _analyze_replicate(config: ScenarioConfig, methods: Sequence[Method], rng, keep_decomposition: bool):
    cohort = simulate_cohort(config, rng)
    out = []
    for _, sched in methods:
        sm = score_matrix(cohort, resolve_schedule(sched, cohort))
        res = fs_test(sm)
        dec = decompose_scores(sm, cohort.endpoint_names) if keep_decomposition else None
        out.append((res.p_value, res.win_ratio, dec))
    return out


def _run_chunk(config, methods, master_seed, reps, keep_decomposition):
    results = []
    for r in reps:
        rng = make_rng(*replicate_seed(master_seed, config.name, config.follow_up, r))
        results.append(_analyze_replicate(config, methods, rng, keep_decomposition))
    return results


def worker_count() -> int:
    env = os.environ.get("WRMT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_cell(config: ScenarioConfig, methods: Sequence[Method], replicates: int,
             alpha: float = 0.05, master_seed: int = 20240101,
             decompose: bool = False, workers: int | None = None) -> list[CellResult]:
    """Replicate one (scenario, follow-up) cell; every method sees the same cohorts.

    Replicate r always uses the stream keyed by (master seed, scenario,
    follow-up, r), so the outcome does not depend on ``workers``.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    workers = worker_count() if workers is None else workers
    reps = list(range(replicates))
    if workers > 1 and replicates > 1:
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_run_chunk, config, methods, master_seed, c, decompose) for c in chunks]
            by_rep = {}
            for c, fut in zip(chunks, futures):
                by_rep.update(zip(c, fut.result()))
        per_rep = [by_rep[r] for r in reps]
    else:
        per_rep = _run_chunk(config, methods, master_seed, reps, decompose)
    cells = []
    for m, (label, _) in enumerate(methods):
        pvals = np.array([rep[m][0] for rep in per_rep])
        wrs = np.array([rep[m][1] for rep in per_rep])
        finite = wrs[np.isfinite(wrs)]
        dec = average_decompositions([rep[m][2] for rep in per_rep]) if decompose else None
        cells.append(CellResult(
            scenario=config.name, follow_up=config.follow_up, method=label,
            replicates=replicates, rejections=int((pvals < alpha).sum()),
            mean_win_ratio=float(finite.mean()) if finite.size else math.nan,
            master_seed=master_seed, decomposition=dec,
        ))
    return cells


def run_study(scenarios: Sequence[str], follow_ups: Sequence[float],
              methods: Sequence[Method] | None = None, replicates: int = 1000,
              alpha: float = 0.05, master_seed: int = 20240101, n: int = 2000,
              decompose: bool = False, workers: int | None = None,
              progress: Callable[[CellResult], None] | None = None,
              **overrides) -> StudyResult:
    """Rejection rates for every (scenario, follow-up, method) cell."""
    methods = list(methods) if methods is not None else default_methods()
    study = StudyResult(alpha=alpha)
    for name in scenarios:
        for fu in follow_ups:
            cfg = scenario(name, follow_up=fu, n=n, **overrides)
            cells = run_cell(cfg, methods, replicates, alpha, master_seed, decompose, workers)
            for c in cells:
                log.info("%s FU=%g %s: %.2f%%", c.scenario, c.follow_up, c.method, 100 * c.rejection_rate)
                if progress:
                    progress(c)
            study.cells.extend(cells)
    return study
