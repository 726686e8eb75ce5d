# A small power study.  The full tables need ~1000 replicates of n = 2000
# per cell; here a few dozen replicates of n = 600 give the rough picture in
# well under a minute.  Set WRMT_THREADS to use more cores.

from wrmt import run_study
from wrmt.simulation import SCENARIOS

print(sorted(SCENARIOS, key=lambda s: (len(s), s)))
SCENARIOS["S1"]   # hospitalization effect only, tau = 0.5

study = run_study(["S0", "S1", "S3"], [500.0, 1500.0], replicates=40, n=600)

for c in study.cells:
    print(f"{c.scenario:4s} FU={c.follow_up:<6g} {c.method:6s} {100 * c.rejection_rate:6.1f}%  "
          f"mean R={c.mean_win_ratio:.3f}")

# long format, ready for a spreadsheet or pandas
rows = study.long_rows()
rows[:2]
