# Adaptive thresholds on a simulated trial.
#
# The threshold for each endpoint is a quantile of all non-zero
# |time_i - time_j| differences in the pooled sample; the caliper picks the
# quantile and a weight stretches (w < 1) or shrinks (w > 1) the one for
# hospitalization.

from wrmt import AdaptiveConfig, adaptive_schedule, analyze, decompose, scenario, simulate_cohort
from wrmt import standard_schedule
from wrmt.decomposition import endpoint_rollup

# death effect only, correlated endpoints, 750 days of follow-up
cohort = simulate_cohort(scenario("S3", follow_up=750, n=1000, seed=3))
print(cohort.n_treated, cohort.n_control)
print("deaths seen:", int((~cohort.censored[:, 0]).sum()))
print("hospitalizations seen:", int((~cohort.censored[:, 1]).sum()))

sched = adaptive_schedule(cohort)          # caliper 20%, weight 1
print(sched.labels(cohort.endpoint_names))

for cfg in (AdaptiveConfig(caliper=0.1), AdaptiveConfig(caliper=0.4),
            AdaptiveConfig(weights=(0.3,)),
            AdaptiveConfig(combined_calipers=(0.4, 0.2, 0.1))):
    s = adaptive_schedule(cohort, cfg)
    res = analyze(cohort, s)
    print(len(s), "stages", f"R={res.win_ratio:.3f}", f"p={res.p_value:.4f}")

# where were the pairs decided?
for label, s in (("WR", standard_schedule()), ("WR-AT", sched)):
    rows = decompose(cohort, s)
    print(label)
    for r in rows:
        print(f"  {r.label:28s} {r.win_pct:6.2f} {r.tie_pct:6.2f} {r.loss_pct:6.2f}  {r.stage_win_ratio:.3f}")
    print(" ", endpoint_rollup(rows, cohort.endpoint_names))
