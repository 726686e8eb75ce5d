import numpy as np
import pytest
from hypothesis import strategies as st

from wrmt import Cohort, Subject

# id, arm, death day, death censored, hospitalization day, hosp. censored
FOUR = [
    ("a", 1, 300.0, False, 80.0, False),
    ("b", 0, 100.0, False, 50.0, False),
    ("c", 1, 200.0, True, 150.0, True),
    ("d", 0, 120.0, True, 60.0, False),
]


def four_subjects():
    return [Subject(i, arm, d, dc, (t,), (tc,)) for i, arm, d, dc, t, tc in FOUR]


@pytest.fixture
def four_cohort():
    return Cohort(four_subjects())


def oracle_rows(cohort):
    return [
        (int(cohort.arm[i]), list(map(float, cohort.times[i])), [int(c) for c in cohort.censored[i]])
        for i in range(cohort.n)
    ]


def random_cohort(rng, n, k, grid=None, censor_p=0.4, strata=None):
    """Small cohort with both arms; integer-day times on a coarse grid so ties occur."""
    arm = np.zeros(n, dtype=int)
    arm[: max(1, n // 2)] = 1
    rng.shuffle(arm)
    if arm.sum() == n:
        arm[0] = 0
    grid = grid or 30
    times = rng.integers(0, grid, size=(n, k + 1)).astype(float) * 10
    censored = rng.random((n, k + 1)) < censor_p
    return Cohort.from_arrays(arm, times, censored, strata=strata)


@st.composite
def cohorts(draw, max_n=10, max_k=2):
    n = draw(st.integers(2, max_n))
    k = draw(st.integers(1, max_k))
    seed = draw(st.integers(0, 2**32 - 1))
    grid = draw(st.sampled_from([3, 8, 40]))
    return random_cohort(np.random.default_rng(seed), n, k, grid=grid)


@st.composite
def schedules_for(draw, k):
    """Random valid schedule for K nonfatal events, terminated by zeros."""
    levels = draw(st.integers(0, 3))
    stages = []
    last = {}
    for _ in range(levels):
        for e in range(k + 1):
            hi = last.get(e, 300.0)
            t = draw(st.sampled_from([0.0, 10.0, 20.0, 50.0, 100.0, 300.0]))
            t = min(t, hi)
            last[e] = t
            stages.append((e, t))
    order = draw(st.permutations(list(range(k + 1))))
    stages += [(e, 0.0) for e in order]
    return stages


# treated / control counts per stratum in the case-study table
STRATUM_COUNTS = [(231, 190), (82, 119), (102, 136), (53, 39),
                  (286, 277), (188, 184), (113, 100), (61, 56)]


def stratified_fixture(seed=2024, scale=1.0):
    """Synthetic eight-stratum cohort (death + hospitalization, integer days).

    ``scale`` shrinks the per-stratum counts for quick unit tests.
    """
    rng = np.random.default_rng(seed)
    arm, times, cens, strata = [], [], [], []
    for s, (n1, n0) in enumerate(STRATUM_COUNTS, start=1):
        n1, n0 = max(1, round(n1 * scale)), max(1, round(n0 * scale))
        for a, m in ((1, n1), (0, n0)):
            d = np.ceil(rng.exponential(1 / (0.0008 * (0.85 if a else 1.0)), m))
            h = np.ceil(rng.exponential(1 / 0.0022, m))
            fu = rng.integers(600, 1500, m).astype(float)
            death = np.minimum(d, fu)
            hosp = np.minimum.reduce([h, d, fu])
            arm += [a] * m
            times.append(np.column_stack([death, hosp]))
            cens.append(np.column_stack([d > fu, h >= np.minimum(d, fu)]))
            strata += [f"stratum{s}"] * m
    return Cohort.from_arrays(np.array(arm), np.vstack(times), np.vstack(cens),
                              strata=np.array(strata, dtype=object),
                              endpoint_names=("death", "hospitalization"))


# filled by the acceptance suite, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
