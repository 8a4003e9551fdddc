"""Discrete-event simulation of encounter-time two-phase locking.

``m`` threads run transactions back to back.  At operation ``O_i`` a
thread spends ``T[i]`` and then tries to lock its ``i``-th item; if another
thread holds it the attempt aborts, every lock is dropped and the
transaction restarts at ``O_1`` immediately.  After the last operation the
thread spends ``t_C`` in commit and then releases everything.

Durations are deterministic, so all randomness comes from the item draws.
Items are numbered ``0 .. d-1``; table ``j`` of the Scenario 1 layouts holds
items ``j*s .. (j+1)*s - 1``.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .exceptions import ConfigurationError, SimulationError
from .patterns import Case
from .solver import WorkloadSpec, thread_classes, validate_spec

__all__ = [
    "SimOptions",
    "SimResult",
    "ClassStats",
    "LockLog",
    "TraceEvent",
    "simulate",
    "empirical_lock_fractions",
    "write_trace_csv",
    "PRNG_NAME",
]

PRNG_NAME = "numpy.random.PCG64"
TRACE_COLUMNS = ("timestamp_us", "thread", "class", "operation", "item", "event")

_COMMIT, _OP = 0, 1  # releases sort before lock attempts at equal timestamps
_BUFFER = 1 << 16
_STALL_LIMIT = 10_000_000
_LIVELOCK_EVENTS = 1_000_000


@dataclass(frozen=True)
class SimOptions:
    seed: int = 0
    target_commits: int = 100_000
    warmup_commits: int = 10_000
    redraw_on_restart: bool = True
    record_trace: bool = False
    batches: int = 20

    def __post_init__(self):
        if int(self.target_commits) != self.target_commits or self.target_commits < 1:
            raise ConfigurationError(f"target_commits must be >= 1, got {self.target_commits}")
        if int(self.warmup_commits) != self.warmup_commits or self.warmup_commits < 0:
            raise ConfigurationError(f"warmup_commits must be >= 0, got {self.warmup_commits}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.batches < 2:
            raise ConfigurationError("at least two batches are needed for a confidence interval")


@dataclass(frozen=True)
class LockLog:
    """Per committed transaction: response time, holding time of each lock, thread class."""

    response: np.ndarray
    holding: np.ndarray
    class_index: np.ndarray

    def select(self, mask) -> "LockLog":
        return LockLog(self.response[mask], self.holding[mask], self.class_index[mask])

    def __len__(self):
        return self.response.size


@dataclass(frozen=True)
class TraceEvent:
    timestamp: float
    thread: int
    cls: str
    operation: int
    item: int
    event: str


@dataclass(frozen=True)
class ClassStats:
    name: str
    threads: int
    commits: int
    aborts: int
    mean_R: float
    half_width_R: float
    attempts: np.ndarray
    op_aborts: np.ndarray
    p_hat: np.ndarray
    f_hat: np.ndarray


@dataclass(frozen=True)
class SimResult:
    mean_R: float
    half_width_R: float
    p_hat: np.ndarray
    f_hat: np.ndarray
    commits: int
    aborts: int
    attempts: np.ndarray
    op_aborts: np.ndarray
    classes: tuple[ClassStats, ...]
    seed: int
    prng: str = PRNG_NAME
    end_time: float = 0.0
    log: LockLog | None = field(default=None, repr=False)
    trace: list[TraceEvent] | None = field(default=None, repr=False)

    def by_class(self, name: str) -> ClassStats:
        for c in self.classes:
            if c.name == name:
                return c
        raise KeyError(name)


def empirical_lock_fractions(log: LockLog) -> np.ndarray:
    """Mean over commits of (time the lock taken at each operation was held) / R."""
    if len(log) == 0:
        raise ValueError("lock log is empty")
    ratios = log.holding / log.response[:, None]
    return np.array([math.fsum(col) for col in ratios.T]) / len(log)


def _batch_half_width(x: np.ndarray, batches: int) -> float:
    k = min(batches, x.size)
    if k < 2:
        return float("nan")
    means = np.array([b.mean() for b in np.array_split(x, k)])
    return float(stats.t.ppf(0.975, k - 1) * means.std(ddof=1) / np.sqrt(k))


class _IntStream:
    """Uniform integers in ``[0, hi)`` pulled from a refilled buffer."""

    def __init__(self, rng, hi):
        self.rng, self.hi = rng, hi
        self.buf, self.pos = [], 0

    def next(self):
        if self.pos >= len(self.buf):
            self.buf = self.rng.integers(0, self.hi, size=_BUFFER).tolist()
            self.pos = 0
        v = self.buf[self.pos]
        self.pos += 1
        return v


def _make_drawer(spec: WorkloadSpec, rng, class_of):
    n, d = spec.layout.n, spec.layout.d
    tag = spec.pattern.tag
    if tag.uses_tables:
        s = spec.layout.s
        ints = _IntStream(rng, s)
        forward = [j * s for j in range(n)]
        backward = forward[::-1]
        offsets = [backward if name == "rev" else forward for name in class_of]
        return lambda t: [base + ints.next() for base in offsets[t]]

    ints = _IntStream(rng, d)

    def distinct(t):
        # sequential rejection gives a uniform ordered sample without replacement
        seen, out = set(), []
        while len(out) < n:
            x = ints.next()
            if x not in seen:
                seen.add(x)
                out.append(x)
        return out

    if tag is Case.ITEMS_SORTED:
        return lambda t: sorted(distinct(t))
    return distinct


def simulate(spec: WorkloadSpec, opts: SimOptions | None = None) -> SimResult:
    """Run the event loop until ``target_commits`` commits follow the warmup.

    Raises
    ------
    ConfigurationError
        If the workload is invalid.
    SimulationError
        If mutual exclusion, progress or the transaction count ledger is
        ever violated.
    """
    opts = opts or SimOptions()
    violations = validate_spec(spec)
    if violations:
        raise ConfigurationError("invalid workload: " + "; ".join(map(str, violations)), violations)

    m, n = spec.m, spec.layout.n
    T = spec.profile.T.tolist()
    t_C = spec.profile.t_C
    classes = thread_classes(spec)
    class_names = [name for name, _ in classes]
    class_of_idx = [ci for ci, (_, size) in enumerate(classes) for _ in range(size)]
    class_of = [class_names[ci] for ci in class_of_idx]

    rng = np.random.Generator(np.random.PCG64(int(opts.seed)))
    draw = _make_drawer(spec, rng, class_of)
    redraw = opts.redraw_on_restart
    warmup, target = int(opts.warmup_commits), int(opts.target_commits)

    owner = [-1] * spec.layout.d
    items = [draw(t) for t in range(m)]
    op = [0] * m
    held = [[] for _ in range(m)]
    acq = [[0.0] * n for _ in range(m)]
    hold_acc = [[0.0] * n for _ in range(m)]
    txn_start = [0.0] * m
    active = [True] * m

    n_cls = len(classes)
    attempts = [[0] * n for _ in range(n_cls)]
    op_aborts = [[0] * n for _ in range(n_cls)]
    log_R, log_hold, log_cls = [], [], []
    trace = [] if opts.record_trace else None

    started = m
    total_aborts = 0
    done = 0
    measured = 0

    heap = []
    seq = 0
    for t in range(m):
        heap.append((T[0], _OP, seq, t))
        seq += 1
    heapq.heapify(heap)
    push, pop = heapq.heappush, heapq.heappop

    last_time, stall = -1.0, 0
    now = 0.0
    since_commit = 0

    def release(t, now, kind):
        acc, a, its = hold_acc[t], acq[t], items[t]
        for i in held[t]:
            x = its[i]
            if owner[x] != t:
                raise SimulationError(f"thread {t} releases item {x} owned by {owner[x]}")
            owner[x] = -1
            acc[i] += now - a[i]
            if trace is not None and kind == "release-commit":
                trace.append(TraceEvent(now, t, class_of[t], i + 1, x, kind))
        held[t].clear()

    while True:
        if not heap:
            raise SimulationError("event queue drained before the commit target was met")
        now, kind, _, t = pop(heap)
        if now == last_time:
            stall += 1
            if stall > _STALL_LIMIT:
                raise SimulationError(f"no progress: clock stuck at {now} for {stall} events")
        else:
            last_time, stall = now, 0
        since_commit += 1
        if since_commit > _LIVELOCK_EVENTS:
            raise SimulationError(
                f"livelock: no commit in {_LIVELOCK_EVENTS} events (clock {now}); "
                "sticky itemsets with fixed durations can abort each other forever"
            )
        measuring = done >= warmup
        c = class_of_idx[t]

        if kind == _OP:
            i = op[t]
            x = items[t][i]
            o = owner[x]
            if measuring:
                attempts[c][i] += 1
            if o == -1:
                owner[x] = t
                acq[t][i] = now
                held[t].append(i)
                if trace is not None:
                    trace.append(TraceEvent(now, t, class_of[t], i + 1, x, "acquire"))
                i += 1
                op[t] = i
                if i < n:
                    push(heap, (now + T[i], _OP, seq, t))
                else:
                    push(heap, (now + t_C, _COMMIT, seq, t))
                seq += 1
                continue
            if o == t:
                raise SimulationError(f"thread {t} requested item {x} it already holds")
            if measuring:
                op_aborts[c][i] += 1
            if trace is not None:
                trace.append(TraceEvent(now, t, class_of[t], i + 1, x, "conflict-abort"))
            release(t, now, "conflict-abort")
            total_aborts += 1
            started += 1
            if redraw:
                items[t] = draw(t)
            op[t] = 0
            push(heap, (now + T[0], _OP, seq, t))
            seq += 1
            continue

        # commit complete
        since_commit = 0
        release(t, now, "release-commit")
        active[t] = False
        if measuring:
            log_R.append(now - txn_start[t])
            log_hold.append(hold_acc[t])
            log_cls.append(c)
            measured += 1
        done += 1
        if measured >= target:
            break
        started += 1
        active[t] = True
        txn_start[t] = now
        hold_acc[t] = [0.0] * n
        items[t] = draw(t)
        op[t] = 0
        push(heap, (now + T[0], _OP, seq, t))
        seq += 1

    if started != done + total_aborts + sum(active):
        raise SimulationError(
            f"transaction ledger does not balance: started={started}, commits={done}, "
            f"aborts={total_aborts}, in flight={sum(active)}"
        )

    log = LockLog(np.array(log_R), np.array(log_hold, dtype=float).reshape(-1, n), np.array(log_cls))
    att = np.array(attempts, dtype=np.int64)
    ab = np.array(op_aborts, dtype=np.int64)

    per_class = []
    for ci, (name, size) in enumerate(classes):
        sub = log.select(log.class_index == ci)
        per_class.append(
            ClassStats(
                name=name,
                threads=size,
                commits=len(sub),
                aborts=int(ab[ci].sum()),
                mean_R=float(sub.response.mean()) if len(sub) else float("nan"),
                half_width_R=_batch_half_width(sub.response, opts.batches),
                attempts=att[ci],
                op_aborts=ab[ci],
                p_hat=_ratio(ab[ci], att[ci]),
                f_hat=empirical_lock_fractions(sub) if len(sub) else np.full(n, np.nan),
            )
        )

    tot_att, tot_ab = att.sum(axis=0), ab.sum(axis=0)
    return SimResult(
        mean_R=float(log.response.mean()),
        half_width_R=_batch_half_width(log.response, opts.batches),
        p_hat=_ratio(tot_ab, tot_att),
        f_hat=empirical_lock_fractions(log),
        commits=len(log),
        aborts=int(tot_ab.sum()),
        attempts=tot_att,
        op_aborts=tot_ab,
        classes=tuple(per_class),
        seed=int(opts.seed),
        end_time=float(now),
        log=log,
        trace=trace,
    )


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def write_trace_csv(trace, path) -> None:
    """One row per lock event with the columns in ``TRACE_COLUMNS``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for ev in trace:
            w.writerow([repr(float(ev.timestamp)), ev.thread, ev.cls, ev.operation, ev.item, ev.event])
