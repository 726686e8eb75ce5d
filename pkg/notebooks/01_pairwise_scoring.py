# Scoring pairs of patients with one and several thresholds.
#
# Four made-up patients: death day, then first hospitalization day.
# A False flag means the event was seen, True means follow-up ended first.

import numpy as np

from wrmt import Cohort, Subject, ThresholdSchedule, score_matrix, standard_schedule, win_loss_score
from wrmt import analyze, decompose

a = Subject("a", 1, 300.0, False, (80.0,), (False,))   # treated, died day 300
b = Subject("b", 0, 100.0, False, (50.0,), (False,))   # control, died day 100
c = Subject("c", 1, 200.0, True, (150.0,), (True,))    # treated, alive and never admitted at 200
d = Subject("d", 0, 120.0, True, (60.0,), (False,))    # control, alive at 120, admitted day 60

# plain win ratio: survival first, then hospitalization, both with threshold 0
wr = standard_schedule()
print(win_loss_score(a, b, wr))   # a outlived b -> +1 decided at stage 1
print(win_loss_score(c, d, wr))   # both censored on survival, c stayed out of hospital longer

# a survival gap now has to reach 250 days before it counts
mt = ThresholdSchedule.of((0, 250), (1, 20), (0, 0), (1, 0))
print(win_loss_score(a, b, mt))   # 200 < 250: survival tie, a's admission came 30 days later -> stage 2

# ignore survival entirely with an infinite threshold on the first stage
flip = ThresholdSchedule.of((0, np.inf), (1, 0), (0, 0))
print(win_loss_score(a, b, flip))

cohort = Cohort([a, b, c, d])
sm = score_matrix(cohort, wr)
sm.wins, sm.losses            # per-patient wins and losses against everybody
sm.treated_wins, sm.treated_losses, sm.ties

print(analyze(cohort, wr))

for row in decompose(cohort, mt):
    print(row.label, round(row.win_pct, 1), round(row.tie_pct, 1), round(row.loss_pct, 1))
