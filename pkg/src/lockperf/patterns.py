"""Conflict probabilities for the four data access patterns.

Scenario 1 splits the ``d`` items into ``n`` equally sized tables and
operation ``O_i`` touches one uniform item of table ``i`` (or of table
``n - i + 1`` for reverse-order threads).  Scenario 2 draws ``n`` distinct
items from the whole set, either in draw order or sorted ascending.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import ModelError

__all__ = [
    "Case",
    "PatternCase",
    "DataLayout",
    "AccessPmf",
    "conflict_tables_same_order",
    "conflict_tables_mixed_order",
    "avg_fraction",
    "conflict_items_random",
    "order_stat_pmf",
    "order_stat_pmf_oracle",
    "conflict_items_sorted",
]

ORACLE_MAX_SUBSETS = 10**6
RENORMALIZE_DRIFT = 1e-12


class Case(enum.Enum):
    TABLES_MIXED_ORDER = "tables-mixed-order"
    TABLES_SAME_ORDER = "tables-same-order"
    ITEMS_RANDOM = "items-random"
    ITEMS_SORTED = "items-sorted"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def uses_tables(self) -> bool:
        return self in (Case.TABLES_MIXED_ORDER, Case.TABLES_SAME_ORDER)

    @classmethod
    def parse(cls, tag) -> "Case":
        if isinstance(tag, Case):
            return tag
        key = str(tag).strip().lower()
        for case, label in _LABELS.items():
            if key in (case.value, label):
                return case
        choices = ", ".join(c.value for c in cls) + ", " + ", ".join(_LABELS.values())
        raise ValueError(f"unknown access pattern case {tag!r} (expected one of {choices})")


_LABELS = {
    Case.TABLES_MIXED_ORDER: "1.1",
    Case.TABLES_SAME_ORDER: "1.2",
    Case.ITEMS_RANDOM: "2.1",
    Case.ITEMS_SORTED: "2.2",
}


@dataclass(frozen=True)
class PatternCase:
    """Access pattern plus, for mixed-order tables, the thread split.

    ``m_fwd`` threads walk the tables ``1..n`` and ``m_rev`` threads walk
    them ``n..1``.  Both are ignored by the other cases.
    """

    tag: Case
    m_fwd: int | None = None
    m_rev: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "tag", Case.parse(self.tag))


@dataclass(frozen=True)
class DataLayout:
    d: int
    n: int

    @property
    def s(self) -> int:
        """Table size for the Scenario 1 cases."""
        if self.n <= 0 or self.d % self.n:
            raise ModelError(f"d={self.d} is not divisible by n={self.n}")
        return self.d // self.n


@dataclass(frozen=True)
class AccessPmf:
    """``probs[i, x]``: probability that operation ``i`` touches item ``x``.

    Both indices are 0-based.  ``drift`` is the largest row-sum error seen
    before any renormalization.
    """

    probs: np.ndarray
    drift: float = 0.0
    renormalized: bool = False

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def d(self) -> int:
        return self.probs.shape[1]


def _as_fractions(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise ModelError("lock fractions must be a non-empty 1-D vector")
    if np.any(~np.isfinite(f)) or np.any(f < 0) or np.any(f > 1):
        raise ModelError(f"lock fractions must lie in [0, 1]: {f!r}")
    return f


def _check_threads(m, name="m", minimum=1):
    if int(m) != m or m < minimum:
        raise ModelError(f"{name} must be an integer >= {minimum}, got {m}")


def conflict_tables_same_order(f, m: int, s: int) -> np.ndarray:
    """All threads walk the tables in the same order.

    Each of the other ``m - 1`` threads holds the item with probability
    ``f[i] / s`` at the moment ``O_i`` requests it.
    """
    f = _as_fractions(f)
    _check_threads(m)
    if s <= 0:
        raise ModelError("table size must be positive")
    return (m - 1) * f / s


def conflict_tables_mixed_order(f_own, f_opp, m_own: int, m_opp: int, s: int) -> np.ndarray:
    """Conflict vector for one thread class when another walks the tables backwards.

    Same-class peers hold table ``i`` with fraction ``f_own[i]``; the
    ``m_opp`` opposite-class threads reach table ``i`` at their own
    operation ``n - i + 1`` and so hold it with fraction ``f_opp[n - i]``
    (0-based).
    """
    f_own = _as_fractions(f_own)
    f_opp = _as_fractions(f_opp)
    if f_own.shape != f_opp.shape:
        raise ModelError("f_own and f_opp must have the same length")
    _check_threads(m_own, "m_own")
    _check_threads(m_opp, "m_opp", minimum=0)
    if s <= 0:
        raise ModelError("table size must be positive")
    same = (m_own - 1) * f_own / s
    if m_opp == 0:
        return same
    return same + m_opp * f_opp[::-1] / s


def avg_fraction(f) -> float:
    f = _as_fractions(f)
    return float(f.mean())


def conflict_items_random(f, m: int, layout: DataLayout) -> np.ndarray:
    """Items drawn at random from the whole set; equal probability for every operation."""
    f = _as_fractions(f)
    _check_threads(m)
    if layout.d <= 0:
        raise ModelError("d must be positive")
    if layout.n > layout.d:
        raise ModelError(f"n={layout.n} exceeds d={layout.d}")
    p = layout.n / layout.d * avg_fraction(f) * (m - 1)
    return np.full(f.size, p)


def _log_comb(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    valid = (b >= 0) & (b <= a)
    out = np.full(np.broadcast(a, b).shape, -np.inf)
    a_, b_ = np.broadcast_arrays(a, b)
    out[valid] = gammaln(a_[valid] + 1) - gammaln(b_[valid] + 1) - gammaln(a_[valid] - b_[valid] + 1)
    return out


def order_stat_pmf(layout: DataLayout) -> AccessPmf:
    """Distribution of the i-th smallest of ``n`` items drawn without replacement from ``d``.

    ``P[i, x] = C(x-1, i-1) C(d-x, n-i) / C(d, n)`` with 1-based ``i, x``,
    evaluated with log-gamma binomials so ``d`` can be large.
    """
    d, n = layout.d, layout.n
    if n < 1 or d < 1:
        raise ModelError("d and n must be positive")
    if n > d:
        raise ModelError(f"n={n} exceeds d={d}")
    i = np.arange(1, n + 1)[:, None]
    x = np.arange(1, d + 1)[None, :]
    logp = _log_comb(x - 1, i - 1) + _log_comb(d - x, n - i) - _log_comb(d, n)
    P = np.exp(logp)
    drift = float(np.max(np.abs(P.sum(axis=1) - 1.0)))
    renormalized = drift > RENORMALIZE_DRIFT
    if renormalized:
        P /= P.sum(axis=1, keepdims=True)
    return AccessPmf(P, drift=drift, renormalized=renormalized)


def order_stat_pmf_oracle(layout: DataLayout, max_subsets: int = ORACLE_MAX_SUBSETS) -> AccessPmf:
    """Same pmf, tallied by walking every ``n``-subset of ``range(d)`` in sorted order."""
    d, n = layout.d, layout.n
    if n < 1 or n > d:
        raise ModelError(f"need 1 <= n <= d, got n={n}, d={d}")
    total = math.comb(d, n)
    if total > max_subsets:
        raise ModelError(f"C({d}, {n}) = {total} subsets exceeds the enumeration cap {max_subsets}")
    counts = np.zeros((n, d), dtype=np.int64)
    rows = np.arange(n)
    for subset in itertools.combinations(range(d), n):
        counts[rows, subset] += 1
    return AccessPmf(counts / total)


def conflict_items_sorted(f, m: int, pmf: AccessPmf) -> np.ndarray:
    """Items drawn at random and accessed in ascending order.

    A peer holds item ``x`` for the fraction ``sum_k P[k, x] f[k]`` of its
    time; operation ``i`` averages that over its own access distribution.
    """
    f = _as_fractions(f)
    _check_threads(m)
    P = pmf.probs
    if P.shape[0] != f.size:
        raise ModelError(f"pmf has {P.shape[0]} rows but f has {f.size} entries")
    f_item = (P * f[:, None]).sum(axis=0)
    return (m - 1) * (P * f_item[None, :]).sum(axis=1)
