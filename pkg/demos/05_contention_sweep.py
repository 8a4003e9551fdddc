"""Ordered access pays off more as contention grows.

Sweep the thread count and compare each ordered pattern with its
unordered counterpart. The CLI writes the same table with
``lockperf sweep --config run.json``.
"""

from lockperf import WorkloadSpec, solve

base = WorkloadSpec.build(2, 1024, 8, 10.0, 10.0, "2.1")

print(f"{'m':>4}{'1.1':>9}{'1.2':>9}{'gain':>8}{'2.1':>9}{'2.2':>9}{'gain':>8}")
for m in (1, 2, 4, 8, 16, 32, 48):
    R = {case: solve(base.replace(m=m, case=case)).R for case in ("1.1", "1.2", "2.1", "2.2")}
    gain_t = 1 - R["1.2"] / R["1.1"]
    gain_i = 1 - R["2.2"] / R["2.1"]
    print(f"{m:4d}{R['1.1']:9.2f}{R['1.2']:9.2f}{gain_t:8.1%}{R['2.1']:9.2f}{R['2.2']:9.2f}{gain_i:8.1%}")
