"""Dataset ingestion, method specs, study configs and result serialization.

Dataset CSV columns::

    id, arm, time_death, status_death, time_event_1, status_event_1, ...[, stratum]

A status of 1 means the event was observed; internally this becomes
``censored = False``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .core import Cohort, CohortError, validate_cohort
from .kernel import ThresholdSchedule, standard_schedule
from .thresholds import AdaptiveBuilder, AdaptiveConfig, general_schedule


class IngestError(ValueError):
    pass


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) or isinstance(x, np.floating):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _event_columns(header: list[str]) -> int:
    k = 0
    while f"time_event_{k + 1}" in header:
        if f"status_event_{k + 1}" not in header:
            raise IngestError(f"missing column status_event_{k + 1}")
        k += 1
    return k


def _parse_number(raw: str, column: str, row: int) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise IngestError(f"row {row}: column {column!r}: cannot parse {raw!r} as a number") from None
    if math.isnan(value) or math.isinf(value):
        raise IngestError(f"row {row}: column {column!r}: value must be finite")
    return value


def _parse_flag(raw: str, column: str, row: int, allowed=(0, 1)) -> int:
    value = _parse_number(raw, column, row)
    if value not in allowed:
        raise IngestError(f"row {row}: column {column!r}: expected one of {allowed}, got {raw!r}")
    return int(value)


def ingest_csv(path, stratum_column: str | None = "stratum", endpoint_names=None) -> Cohort:
    """Read a subject-level dataset into a validated cohort.

    Row numbers in error messages count the header as row 1.  The stratum
    column is optional; if present, it must be filled on every row.
    """
    with open(path, newline="") as fh:
        return read_cohort_csv(fh, stratum_column, endpoint_names)


def read_cohort_csv(fh, stratum_column: str | None = "stratum", endpoint_names=None) -> Cohort:
    reader = csv.DictReader(fh)
    header = [h.strip() for h in (reader.fieldnames or [])]
    reader.fieldnames = header
    required = ["id", "arm", "time_death", "status_death"]
    missing = [c for c in required if c not in header]
    if missing:
        raise IngestError(f"missing column(s): {', '.join(missing)}")
    k = _event_columns(header)
    if k == 0:
        raise IngestError("missing column(s): time_event_1, status_event_1")
    use_strata = stratum_column is not None and stratum_column in header
    ids, arms, times, cens, strata = [], [], [], [], []
    for row, rec in enumerate(reader, start=2):
        if None in rec:
            raise IngestError(f"row {row}: more fields than header columns")
        ids.append(rec["id"].strip())
        arms.append(_parse_flag(rec["arm"], "arm", row))
        t = [_parse_number(rec["time_death"], "time_death", row)]
        c = [1 - _parse_flag(rec["status_death"], "status_death", row)]
        for e in range(1, k + 1):
            t.append(_parse_number(rec[f"time_event_{e}"], f"time_event_{e}", row))
            c.append(1 - _parse_flag(rec[f"status_event_{e}"], f"status_event_{e}", row))
        neg = [col for col, v in zip(["time_death"] + [f"time_event_{e}" for e in range(1, k + 1)], t) if v < 0]
        if neg:
            raise IngestError(f"row {row}: negative time in column {neg[0]!r}")
        times.append(t)
        cens.append(c)
        if use_strata:
            label = (rec[stratum_column] or "").strip()
            strata.append(label if label else None)
    if not ids:
        raise IngestError("dataset has no rows")
    if use_strata:
        blank = [i + 2 for i, s in enumerate(strata) if s is None]
        if blank and len(blank) < len(strata):
            raise IngestError(
                f"stratum labels present for some but not all subjects (blank on rows {blank[:10]})"
            )
        if len(blank) == len(strata):
            strata = None
    elif stratum_column is not None and stratum_column != "stratum":
        raise IngestError(f"missing stratum column {stratum_column!r}")
    try:
        cohort = Cohort.from_arrays(
            arm=np.array(arms), times=np.array(times), censored=np.array(cens, dtype=bool),
            ids=np.array(ids, dtype=object), strata=strata if use_strata else None,
            endpoint_names=endpoint_names,
        )
        return validate_cohort(cohort)
    except CohortError as exc:
        raise IngestError(str(exc)) from exc


def cohort_to_csv(cohort: Cohort, fh) -> None:
    k = cohort.n_events
    header = ["id", "arm", "time_death", "status_death"]
    for e in range(1, k + 1):
        header += [f"time_event_{e}", f"status_event_{e}"]
    if cohort.strata is not None:
        header.append("stratum")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for i in range(cohort.n):
        row = [fmt(cohort.ids[i]), int(cohort.arm[i])]
        for e in range(k + 1):
            row += [fmt(cohort.times[i, e]), int(not cohort.censored[i, e])]
        if cohort.strata is not None:
            row.append(cohort.strata[i])
        w.writerow(row)


def write_cohort_csv(cohort: Cohort, path) -> None:
    buf = io.StringIO()
    cohort_to_csv(cohort, buf)
    atomic_write(path, buf.getvalue())


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- methods ----------------------------------------------------------------

_THRESHOLD_KEY = re.compile(r"^(d|t(\d+))$")


def parse_thresholds(text: str) -> ThresholdSchedule:
    """``"d=90,t1=60"`` -> WR-MT(90, 60, 0, 0).

    Levels may be separated by ``/``: ``"d=120/60,t1=90/45"``.
    """
    levels: dict[int, list[float]] = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise ValueError(f"bad threshold spec {part!r}; expected key=value")
        key, value = (s.strip() for s in part.split("=", 1))
        m = _THRESHOLD_KEY.match(key)
        if not m:
            raise ValueError(f"unknown threshold key {key!r}; use d, t1, t2, ...")
        endpoint = 0 if key == "d" else int(m.group(2))
        if endpoint < 0 or (key != "d" and endpoint == 0):
            raise ValueError(f"unknown threshold key {key!r}")
        levels[endpoint] = [float(v) for v in value.split("/")]
    if 0 not in levels:
        raise ValueError("threshold spec needs a survival threshold d")
    k = max(levels)
    if sorted(levels) != list(range(k + 1)) or k < 1:
        raise ValueError("threshold spec needs d and t1..tK without gaps")
    return general_schedule(levels[0], [levels[e] for e in range(1, k + 1)])


def build_method(method: str, caliper: float = 0.2, weight=None, combined_calipers=None,
                 thresholds: str | None = None, n_events: int = 1):
    """Schedule (or per-cohort builder) for ``wr``, ``wrmt`` or ``wrat``."""
    method = method.lower().replace("-", "")
    if method == "wr":
        return standard_schedule(n_events)
    if method == "wrmt":
        if not thresholds:
            raise ValueError("method wrmt needs thresholds, e.g. d=90,t1=60")
        return parse_thresholds(thresholds)
    if method == "wrat":
        if isinstance(weight, str):
            weight = [float(w) for w in weight.split(",")]
        if isinstance(combined_calipers, str):
            combined_calipers = [float(c) for c in re.split(r"[,/]", combined_calipers)]
        return AdaptiveBuilder(AdaptiveConfig(
            caliper=float(caliper),
            weights=None if weight is None else tuple(np.atleast_1d(weight)),
            combined_calipers=None if combined_calipers is None else tuple(combined_calipers),
        ))
    raise ValueError(f"unknown method {method!r}; choose wr, wrmt or wrat")


_METHOD_SPEC = re.compile(r"^\s*(\w[\w-]*)\s*(?:\((.*)\))?\s*$")


def parse_method_spec(text: str):
    """``wr`` | ``wrat(c=0.1,w=0.5)`` | ``wrat(combined=0.4/0.2/0.1)`` | ``wrmt(d=90,t1=60)``"""
    m = _METHOD_SPEC.match(text)
    if not m:
        raise ValueError(f"bad method spec {text!r}")
    name, args = m.group(1), m.group(2) or ""
    if name.lower().replace("-", "") == "wrmt":
        return build_method("wrmt", thresholds=args)
    kw: dict[str, Any] = {}
    for part in filter(None, (p.strip() for p in args.split(","))):
        key, value = (s.strip() for s in part.split("=", 1))
        if key in ("c", "caliper"):
            kw["caliper"] = float(value)
        elif key in ("w", "weight"):
            kw["weight"] = [float(v) for v in value.split("/")]
        elif key in ("combined", "combined_calipers"):
            kw["combined_calipers"] = [float(v) for v in value.split("/")]
        else:
            raise ValueError(f"unknown method parameter {key!r} in {text!r}")
    return build_method(name, **kw)


def split_list(text: str) -> list[str]:
    """Split on commas that are not inside parentheses."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        out.append("".join(cur).strip())
    return [s for s in out if s]


# -- study configs ----------------------------------------------------------

@dataclass
class StudyConfig:
    scenarios: list[str]
    follow_ups: list[float]
    methods: list[tuple[str, Any]]
    replicates: int = 1000
    master_seed: int = 20240101
    alpha: float = 0.05
    n: int = 2000
    decompose: bool = False
    overrides: dict = field(default_factory=dict)


_OVERRIDE_KEYS = {"lambda_d": float, "lambda_t1": float, "beta": float,
                  "alpha_d": float, "alpha_t1": float, "no_event_censoring": str}


def parse_study_config(text: str) -> StudyConfig:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    for req in ("scenarios", "follow_ups"):
        if req not in values:
            raise ValueError(f"config is missing {req!r}")
    methods_text = values.pop("methods", "wr, wrat")
    cfg = StudyConfig(
        scenarios=split_list(values.pop("scenarios")),
        follow_ups=[float(v) for v in split_list(values.pop("follow_ups"))],
        methods=[(spec, parse_method_spec(spec)) for spec in split_list(methods_text)],
    )
    for key, value in values.items():
        if key == "replicates":
            cfg.replicates = int(value)
        elif key == "master_seed":
            cfg.master_seed = int(value)
        elif key == "alpha":
            cfg.alpha = float(value)
        elif key == "n":
            cfg.n = int(value)
        elif key == "decompose":
            cfg.decompose = value.lower() in ("1", "true", "yes")
        elif key in _OVERRIDE_KEYS:
            cfg.overrides[key] = _OVERRIDE_KEYS[key](value)
        else:
            raise ValueError(f"unknown config key {key!r}")
    if not 0 < cfg.alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return cfg


def read_study_config(path) -> StudyConfig:
    return parse_study_config(Path(path).read_text())


# -- result tables ----------------------------------------------------------

def rows_to_csv(rows: Iterable[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _finite_or_str(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return fmt(obj)
    if isinstance(obj, dict):
        return {k: _finite_or_str(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite_or_str(v) for v in obj]
    return obj


def to_json(obj) -> str:
    """JSON with non-finite floats written as the strings "inf"/"nan"."""
    return json.dumps(_finite_or_str(json.loads(json.dumps(obj, default=_json_default))), indent=2) + "\n"
