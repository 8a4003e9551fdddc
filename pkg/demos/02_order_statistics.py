"""Which item does a sorted transaction touch at its i-th step?

When n items are drawn without replacement from d and visited in ascending
order, the i-th access is the i-th order statistic. Its pmf is evaluated in
the log domain, so d in the thousands is cheap.
"""

import numpy as np

from lockperf import DataLayout, order_stat_pmf, order_stat_pmf_oracle

small = DataLayout(d=4, n=2)
P = order_stat_pmf(small).probs
print("d=4, n=2 (rows are access steps, columns are items 1..4)")
print(np.round(P, 4))
print("agrees with subset enumeration:",
      np.allclose(P, order_stat_pmf_oracle(small).probs, rtol=0, atol=1e-12))

big = order_stat_pmf(DataLayout(d=2000, n=64))
print(f"\nd=2000, n=64: row-sum drift before renormalization {big.drift:.2e}")
modes = big.probs.argmax(axis=1) + 1
print("most likely item at steps 1, 16, 32, 48, 64:", modes[[0, 15, 31, 47, 63]])

# Early steps favour low items and late steps favour high items, so two
# sorted transactions tend to meet at the same step of their walks.
P = big.probs
occupancy = P.sum(axis=0)
print(f"mean items per position {occupancy.mean():.4f} = n/d = {64 / 2000:.4f}")
