"""Absorbing-chain arithmetic for a single transaction.

A transaction with ``n`` transactional operations is modelled as a linear
chain of transient states ``O_1 .. O_n`` plus one absorbing commit state.
From ``O_i`` the chain moves to ``O_{i+1}`` (or commit) with probability
``1 - p_i`` and aborts back to ``O_1`` with probability ``p_i``.

Vectors are 0-indexed numpy arrays; operation ``O_i`` lives at index ``i-1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ModelError

__all__ = [
    "OperationProfile",
    "LockProfile",
    "visit_counts",
    "visit_counts_reference",
    "response_time",
    "lock_holding_times",
    "lock_fractions",
    "lock_profile",
]

REFERENCE_MAX_N = 64


@dataclass(frozen=True)
class OperationProfile:
    """Residence times of the operation states and the commit state (µs)."""

    T: np.ndarray
    t_C: float

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        if T.ndim != 1 or T.size == 0:
            raise ModelError("T must be a non-empty 1-D vector")
        if np.any(~np.isfinite(T)) or np.any(T < 0):
            raise ModelError("operation durations must be finite and >= 0")
        if not np.isfinite(self.t_C) or self.t_C < 0:
            raise ModelError("commit duration must be finite and >= 0")
        if self.t_C == 0 and not np.any(T > 0):
            raise ModelError("at least one duration must be strictly positive")
        T.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "t_C", float(self.t_C))

    @property
    def n(self) -> int:
        return self.T.size

    @property
    def conflict_free_time(self) -> float:
        return float(self.T.sum() + self.t_C)

    @classmethod
    def uniform(cls, n: int, duration: float, t_C: float) -> "OperationProfile":
        return cls(np.full(n, float(duration)), t_C)


@dataclass(frozen=True)
class LockProfile:
    """Per-operation lock holding times ``l``, fractions ``f`` and mean response ``R``."""

    l: np.ndarray
    f: np.ndarray
    R: float


def _check_probabilities(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ModelError("conflict vector must be a non-empty 1-D vector")
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p >= 1):
        raise ModelError(f"conflict probabilities must lie in [0, 1): {p!r}")
    return p


def visit_counts(p) -> np.ndarray:
    """Mean number of visits to each operation state before commit.

    Uses the product form ``N1[i] = prod_{k>=i} 1 / (1 - p[k])``, accumulated
    backwards from the last operation.

    Parameters
    ----------
    p : array_like, shape (n,)
        Per-operation conflict probabilities, each in ``[0, 1)``.

    Returns
    -------
    ndarray, shape (n,)
        Non-increasing visit counts, all ``>= 1``.
    """
    p = _check_probabilities(p)
    return np.cumprod(1.0 / (1.0 - p[::-1]))[::-1]


def visit_counts_reference(p, max_n: int = REFERENCE_MAX_N) -> np.ndarray:
    """First row of the fundamental matrix ``(I - Q)^-1``, built explicitly.

    Test oracle for :func:`visit_counts`; costs a dense ``n x n`` inverse.
    """
    p = _check_probabilities(p)
    n = p.size
    if n > max_n:
        raise ModelError(f"reference inversion capped at n={max_n}, got n={n}")
    Q = np.zeros((n, n))
    Q[:, 0] = p
    Q[np.arange(n - 1), np.arange(1, n)] = 1.0 - p[:-1]
    try:
        N = np.linalg.inv(np.eye(n) - Q)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - impossible for valid p
        raise RuntimeError("I - Q is singular for a valid conflict vector") from exc
    return N[0]


def _check_lengths(N1, prof: OperationProfile) -> np.ndarray:
    N1 = np.asarray(N1, dtype=float)
    if N1.shape != prof.T.shape:
        raise ModelError(f"length mismatch: N1 has {N1.size} entries, T has {prof.n}")
    return N1


def response_time(N1, prof: OperationProfile) -> float:
    """Mean transaction execution time ``N1 . T + t_C``."""
    N1 = _check_lengths(N1, prof)
    return float(N1 @ prof.T + prof.t_C)


def lock_holding_times(N1, prof: OperationProfile) -> np.ndarray:
    """Mean total time the lock taken at each operation stays held.

    The lock acquired at ``O_i`` is held through every later visit to
    ``O_{i+1} .. O_n`` and through the commit state.
    """
    N1 = _check_lengths(N1, prof)
    work = N1 * prof.T
    # suffix sums over k > i
    tail = np.concatenate([np.cumsum(work[::-1])[::-1][1:], [0.0]])
    return tail + prof.t_C


def lock_fractions(l, R: float) -> np.ndarray:
    """Fraction ``l / R`` of the execution time each lock is held."""
    l = np.asarray(l, dtype=float)
    if not R > 0:
        raise ModelError(f"response time must be positive, got {R}")
    # tolerate roundoff between the two summation orders
    if np.any(l > R * (1 + 1e-12)):
        raise ModelError("a lock holding time exceeds the response time")
    return np.minimum(l / R, 1.0)


def lock_profile(p, prof: OperationProfile) -> tuple[np.ndarray, LockProfile]:
    """Visit counts and lock profile for one conflict vector."""
    N1 = visit_counts(p)
    R = response_time(N1, prof)
    l = lock_holding_times(N1, prof)
    return N1, LockProfile(l=l, f=lock_fractions(l, R), R=R)
