"""Solve the four access patterns on one workload.

Eight threads, 1024 items, eight operations of 10 us plus a 10 us commit.
Tables: items split evenly into n tables, operation i uses table i
(same order) or table n+1-i for half the threads (mixed order).
Items: n distinct items at random, either unsorted or in ascending order.
"""

import numpy as np

from lockperf import WorkloadSpec, solve

m, d, n, T, t_C = 8, 1024, 8, 10.0, 10.0

for case in ("1.1", "1.2", "2.1", "2.2"):
    split = {"m_fwd": 4, "m_rev": 4} if case == "1.1" else {}
    sol = solve(WorkloadSpec.build(m, d, n, T, t_C, case, **split))
    c = sol.classes[0]
    print(f"case {case}  {sol.case.value:<20} R = {sol.R:8.3f} us "
          f"after {sol.iterations} iterations")
    print("    p =", np.round(c.p, 4))

# The mixed-order solution is symmetric between the two thread classes.
sol = solve(WorkloadSpec.build(m, d, n, T, t_C, "1.1", m_fwd=4, m_rev=4))
fwd, rev = sol.by_class("fwd"), sol.by_class("rev")
print("\nfwd and rev classes identical:", np.allclose(fwd.p, rev.p))
