"""Check the model against a simulated lock manager.

The simulator runs m threads under encounter-time two-phase locking. A
thread that meets a held lock aborts, drops its locks and restarts at once.
All threads share one seeded PCG64 stream, so runs are reproducible.
"""

import numpy as np

from lockperf import SimOptions, WorkloadSpec, simulate, solve

opts = SimOptions(seed=2024, target_commits=20_000, warmup_commits=2_000)

print(f"{'case':<6}{'R model':>10}{'R sim':>10}{'+/-':>8}{'max |dp|':>10}")
for case in ("1.1", "1.2", "2.1", "2.2"):
    split = {"m_fwd": 4, "m_rev": 4} if case == "1.1" else {}
    spec = WorkloadSpec.build(8, 1024, 8, 10.0, 10.0, case, **split)
    sol, sim = solve(spec), simulate(spec, opts)
    dp = max(np.max(np.abs(c.p - sim.by_class(c.name).p_hat)) for c in sol.classes)
    print(f"{case:<6}{sol.R:10.3f}{sim.mean_R:10.3f}{sim.half_width_R:8.3f}{dp:10.4f}")

# With one thread nothing can conflict, and both sides give sum(T) + t_C.
spec = WorkloadSpec.build(1, 1024, 8, 10.0, 10.0, "2.2")
print("\nm = 1:", solve(spec).R, simulate(spec, opts).mean_R)
