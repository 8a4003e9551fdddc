"""How often does a transaction revisit each operation before it commits?

A transaction runs operations O_1..O_n in order. A conflict at O_i aborts it
back to O_1. The mean number of visits to each state has a product form,
which we compare against the brute-force fundamental matrix.
"""

import numpy as np

from lockperf import OperationProfile, visit_counts, visit_counts_reference
from lockperf.markov import lock_profile

p = np.array([0.3, 0.1, 0.25])
print("conflict probabilities   ", p)
print("visits (product form)    ", visit_counts(p))
print("visits (matrix inverse)  ", visit_counts_reference(p))
print("exact                    ", [400 / 189, 40 / 27, 4 / 3])

# Late conflicts are expensive: every abort repeats all earlier work.
for where in range(3):
    q = np.zeros(3)
    q[where] = 0.5
    print(f"p = 0.5 only at O_{where + 1}: visits {visit_counts(q)}")

# Turn visits into time. Each operation takes T_i, commit takes t_C.
prof = OperationProfile([2.0, 5.0, 3.0], 4.0)
N1, lp = lock_profile(p, prof)
print(f"\nresponse time R = {lp.R:.4f} (conflict free {prof.conflict_free_time})")
print("lock holding times l       ", np.round(lp.l, 4))
print("holding fractions  f = l/R ", np.round(lp.f, 4))
