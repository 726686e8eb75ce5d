"""Command line entry point: ``wrmt analyze|decompose|simulate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass

import numpy as np

from . import io as wio
from .core import Cohort
from .decomposition import Decomposition, decompose_scores, endpoint_rollup
from .inference import analyze, resolve_schedule, stratified_analysis
from .kernel import ThresholdSchedule, score_matrix
from .simulation import run_study

log = logging.getLogger("wrmt")

RESULT_COLUMNS = ["scope", "n_treated", "n_control", "win_ratio", "statistic", "variance",
                  "z_score", "p_value", "treated_wins", "treated_losses", "ties"]
STAGE_COLUMNS = ["Table", "Stage", "Win%", "Tie%", "Loss%", "Stage-level win ratio"]
STUDY_COLUMNS = ["scenario", "FU", "method", "metric", "value", "replicates", "seed"]


@dataclass
class AnalysisRequest:
    command: str
    input_path: str
    method: str = "wr"
    caliper: float = 0.2
    weight: str | None = None
    combined_calipers: str | None = None
    thresholds: str | None = None
    stratify_by: str | None = None
    alpha: float = 0.05
    output_path: str | None = None
    output_format: str = "csv"
    replicates: int | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.command not in ("analyze", "decompose", "simulate"):
            raise ValueError(f"unknown command {self.command!r}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.output_format not in ("csv", "json"):
            raise ValueError("output format must be csv or json")
        if self.command != "simulate" and self.method.lower().replace("-", "") == "wrmt" and not self.thresholds:
            raise ValueError("method wrmt needs --thresholds, e.g. d=90,t1=60")


def _load(request: AnalysisRequest) -> tuple[Cohort, object]:
    cohort = wio.ingest_csv(request.input_path, stratum_column=request.stratify_by or "stratum")
    if not request.stratify_by and cohort.strata is not None:
        cohort = Cohort.from_arrays(cohort.arm, cohort.times, cohort.censored, cohort.ids,
                                    None, cohort.endpoint_names)
    method = wio.build_method(request.method, request.caliper, request.weight,
                              request.combined_calipers, request.thresholds, cohort.n_events)
    return cohort, method


def _schedule_info(schedule: ThresholdSchedule, names) -> list[dict]:
    return [{"stage": s + 1, "endpoint": names[st.endpoint], "threshold": st.threshold}
            for s, st in enumerate(schedule.stages)]


def run_analyze(request: AnalysisRequest) -> dict:
    cohort, method = _load(request)
    out: dict = {"command": "analyze", "method": request.method, "alpha": request.alpha,
                 "n": cohort.n}
    if cohort.strata is not None:
        strat = stratified_analysis(cohort, method)
        res = strat.result
        out["strata"] = [
            {"scope": p.name, "n_treated": p.n_treated, "n_control": p.n_control,
             **p.result.to_dict(), "schedule": _schedule_info(p.schedule, cohort.endpoint_names)}
            for p in strat.strata
        ]
        out["excluded_strata"] = strat.excluded
        out["thresholds_per_stratum"] = strat.thresholds_per_stratum
    else:
        sched = resolve_schedule(method, cohort)
        res = analyze(cohort, sched)
        out["schedule"] = _schedule_info(sched, cohort.endpoint_names)
    out["result"] = {"scope": "overall", "n_treated": cohort.n_treated,
                     "n_control": cohort.n_control, **res.to_dict()}
    out["result"]["significant"] = bool(res.p_value < request.alpha)
    return out


def run_decompose(request: AnalysisRequest) -> dict:
    cohort, method = _load(request)
    parts = [cohort] if cohort.strata is None else [
        cohort.subset(cohort.strata == s) for s in cohort.stratum_names()]
    decomps = []
    for part in parts:
        if part.n_treated == 0 or part.n_control == 0:
            continue
        decomps.append(decompose_scores(score_matrix(part, resolve_schedule(method, part)),
                                        cohort.endpoint_names))
    if not decomps:
        raise ValueError("decomposition needs both arms")
    total = decomps[0]
    if len(decomps) > 1:
        layouts = {tuple(st.endpoint for st in d.schedule.stages) for d in decomps}
        if len(layouts) != 1:
            raise ValueError("strata produced different stage layouts")
        total = Decomposition(decomps[0].schedule, cohort.endpoint_names,
                              sum(d.stage_wins for d in decomps),
                              sum(d.stage_losses for d in decomps),
                              sum(d.n_pairs for d in decomps))
    summaries = total.summaries()
    if len(decomps) > 1:
        # thresholds may differ between strata; label by endpoint only
        summaries = [type(s)(s.stage, f"{cohort.endpoint_names[s.endpoint]}[{s.stage}]", s.endpoint,
                             float("nan"), s.win_pct, s.tie_pct, s.loss_pct, s.stage_win_ratio)
                     for s in summaries]
    rollup = endpoint_rollup(summaries, cohort.endpoint_names)
    wins: dict[str, float] = {}
    losses: dict[str, float] = {}
    for s in summaries:
        name = cohort.endpoint_names[s.endpoint]
        wins[name] = wins.get(name, 0.0) + s.win_pct
        losses[name] = losses.get(name, 0.0) + s.loss_pct
    return {
        "command": "decompose",
        "method": request.method,
        "n_pairs": total.n_pairs,
        "stages": [s.row() for s in summaries],
        "endpoints": [{"Stage": "Overall", "Win%": sum(wins.values()), "Tie%": summaries[-1].tie_pct,
                       "Loss%": sum(losses.values()), "Stage-level win ratio": rollup["Overall"]}]
        + [{"Stage": name, "Win%": wins[name], "Tie%": None, "Loss%": losses[name],
            "Stage-level win ratio": rollup[name]} for name in wins],
    }


def run_simulate(request: AnalysisRequest) -> dict:
    cfg = wio.read_study_config(request.input_path)
    reps = request.replicates or cfg.replicates
    study = run_study(cfg.scenarios, cfg.follow_ups, cfg.methods, replicates=reps,
                      alpha=cfg.alpha, master_seed=cfg.master_seed, n=cfg.n,
                      decompose=cfg.decompose, workers=request.workers, **cfg.overrides)
    rows = study.long_rows()
    nested: dict = {}
    for r in rows:
        nested.setdefault(r["scenario"], {}).setdefault(wio.fmt(r["FU"]), {}) \
              .setdefault(r["method"], {"replicates": r["replicates"], "seed": r["seed"]})[r["metric"]] = r["value"]
    return {"command": "simulate", "alpha": cfg.alpha, "rows": rows, "results": nested}


def render(result: dict, output_format: str) -> str:
    if output_format == "json":
        payload = {k: v for k, v in result.items() if k != "rows"}
        return wio.to_json(payload)
    cmd = result["command"]
    if cmd == "analyze":
        rows = [result["result"]] + result.get("strata", [])
        return wio.rows_to_csv(rows, RESULT_COLUMNS)
    if cmd == "decompose":
        rows = [{"Table": "stage", **r} for r in result["stages"]]
        rows += [{"Table": "endpoint", **r} for r in result["endpoints"]]
        return wio.rows_to_csv(rows, STAGE_COLUMNS)
    return wio.rows_to_csv(result["rows"], STUDY_COLUMNS)


def display(result: dict) -> str:
    """Human-readable table, two decimals."""
    def f(x):
        if x is None:
            return ""
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
            return str(x)
        return f"{x:.2f}" if isinstance(x, float) and abs(x) < 1e6 else str(x)

    cmd = result["command"]
    if cmd == "analyze":
        r = result["result"]
        lines = [f"win ratio {r['win_ratio']:.3f}  z {r['z_score']:.3f}  p {r['p_value']:.4f}  "
                 f"(wins {r['treated_wins']}, losses {r['treated_losses']}, ties {r['ties']})"]
        for s in result.get("strata", []):
            lines.append(f"  {s['scope']}: n={s['n_treated']}/{s['n_control']}  "
                         f"win ratio {s['win_ratio']:.3f}  S {s['statistic']:.0f}")
        for e in result.get("excluded_strata", []):
            lines.append(f"  excluded: {e['reason']}")
        return "\n".join(lines) + "\n"
    if cmd == "decompose":
        cols = STAGE_COLUMNS[1:]
        lines = ["\t".join(cols)]
        lines += ["\t".join(f(r[c]) for c in cols) for r in result["stages"]]
        lines.append("")
        lines += ["\t".join(f(r[c]) for c in cols) for r in result["endpoints"]]
        return "\n".join(lines) + "\n"
    lines = []
    for r in result["rows"]:
        if r["metric"] == "rejection_rate":
            lines.append(f"{r['scenario']}\tFU={r['FU']:g}\t{r['method']}\t{100 * r['value']:.2f}%")
    return "\n".join(lines) + "\n"


def run(request: AnalysisRequest) -> dict:
    """Execute a request and write its output; returns the result mapping."""
    handler = {"analyze": run_analyze, "decompose": run_decompose, "simulate": run_simulate}[request.command]
    result = handler(request)
    if request.output_path:
        wio.atomic_write(request.output_path, render(result, request.output_format))
    return result


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wrmt", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("input_path")
        sp.add_argument("-o", "--output", dest="output_path")
        sp.add_argument("--format", dest="output_format", choices=["csv", "json"], default="csv")
        sp.add_argument("-q", "--quiet", action="store_true", help="do not print the table")

    for name in ("analyze", "decompose"):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--method", choices=["wr", "wrmt", "wrat"], default="wr")
        sp.add_argument("--caliper", type=float, default=0.2)
        sp.add_argument("--weight", help="one weight, or comma-separated per nonfatal event")
        sp.add_argument("--combined-calipers", help="e.g. 0.4,0.2,0.1")
        sp.add_argument("--thresholds", help='fixed WR-MT thresholds, e.g. "d=90,t1=60"')
        sp.add_argument("--stratify-by", help="stratum column name")
        sp.add_argument("--alpha", type=float, default=0.05)

    sp = sub.add_parser("simulate")
    common(sp)
    sp.add_argument("--replicates", type=int, help="override the config's replicate count")
    sp.add_argument("--workers", type=int, help="worker processes (default: WRMT_THREADS or all cores)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    fields = {k: v for k, v in vars(args).items() if k not in ("verbose", "quiet")}
    try:
        request = AnalysisRequest(**fields)
        result = run(request)
    except Exception as exc:  # noqa: BLE001 - reported as a structured error
        report = {"error": type(exc).__name__, "message": str(exc), "command": args.command,
                  "input": getattr(args, "input_path", None)}
        sys.stderr.write(json.dumps(report) + "\n")
        return 1
    if not args.quiet:
        sys.stdout.write(display(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
