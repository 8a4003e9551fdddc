import csv
from collections import defaultdict

import numpy as np
import pytest

from lockperf.exceptions import ConfigurationError, SimulationError
from lockperf.simulator import (
    TRACE_COLUMNS,
    LockLog,
    SimOptions,
    empirical_lock_fractions,
    simulate,
    write_trace_csv,
)
from lockperf.solver import WorkloadSpec

ALL_CASES = ["1.1", "1.2", "2.1", "2.2"]


def small(case, m=4, d=16, n=4, T=(3.0, 1.0, 2.0, 4.0), t_C=2.0):
    kw = {"m_fwd": m - m // 2, "m_rev": m // 2} if case == "1.1" else {}
    return WorkloadSpec.build(m, d, n, list(T), t_C, case, **kw)


@pytest.mark.parametrize("case", ALL_CASES)
def test_single_thread_response_is_exact(case):
    spec = WorkloadSpec.build(1, 4, 2, [10.0, 10.0], 5.0, case, m_fwd=1, m_rev=0)
    sim = simulate(spec, SimOptions(seed=3, target_commits=500, warmup_commits=10))
    assert sim.mean_R == 25.0
    np.testing.assert_array_equal(sim.p_hat, 0)
    assert sim.aborts == 0
    np.testing.assert_allclose(sim.f_hat, [15 / 25, 5 / 25])


def test_commit_only_holding():
    spec = WorkloadSpec.build(1, 4, 2, [0.0, 0.0], 5.0, "2.1")
    sim = simulate(spec, SimOptions(target_commits=50, warmup_commits=0))
    np.testing.assert_array_equal(sim.f_hat, [1.0, 1.0])


@pytest.mark.parametrize("case", ALL_CASES)
def test_same_seed_same_result(case):
    opts = SimOptions(seed=99, target_commits=3000, warmup_commits=300)
    a, b = simulate(small(case), opts), simulate(small(case), opts)
    assert a.mean_R == b.mean_R and a.half_width_R == b.half_width_R
    assert a.p_hat.tobytes() == b.p_hat.tobytes()
    assert a.log.response.tobytes() == b.log.response.tobytes()
    c = simulate(small(case), SimOptions(seed=100, target_commits=3000, warmup_commits=300))
    assert c.log.response.tobytes() != a.log.response.tobytes()


def desk(case, m=8):
    kw = {"m_fwd": m // 2, "m_rev": m - m // 2} if case == "1.1" else {}
    return WorkloadSpec.build(m, 1024, 8, 10.0, 10.0, case, **kw)


@pytest.mark.parametrize(
    "spec, redraw",
    [(small(c), True) for c in ALL_CASES] + [(desk(c), False) for c in ALL_CASES],
    ids=[f"{c}-redraw" for c in ALL_CASES] + [f"{c}-sticky" for c in ALL_CASES],
)
def test_result_invariants(spec, redraw):
    sim = simulate(spec, SimOptions(seed=1, target_commits=2000, warmup_commits=100, redraw_on_restart=redraw))
    assert sim.commits == 2000
    assert np.all((sim.p_hat >= 0) & (sim.p_hat <= 1))
    assert np.all((sim.f_hat >= 0) & (sim.f_hat <= 1))
    assert sim.mean_R >= spec.profile.conflict_free_time - 1e-9
    assert sim.aborts > 0
    assert sum(c.commits for c in sim.classes) == sim.commits
    assert np.isfinite(sim.half_width_R) and sim.half_width_R > 0


def test_empirical_lock_fractions():
    log = LockLog(np.array([10.0, 20.0]), np.array([[5.0, 2.0], [20.0, 4.0]]), np.array([0, 0]))
    np.testing.assert_allclose(empirical_lock_fractions(log), [0.75, 0.2])
    with pytest.raises(ValueError):
        empirical_lock_fractions(LockLog(np.zeros(0), np.zeros((0, 2)), np.zeros(0, dtype=int)))


def _replay(trace):
    """Rebuild lock ownership from the trace and check ETL shape."""
    owner = {}
    held = defaultdict(list)
    next_op = defaultdict(lambda: 1)
    for ev in trace:
        t = ev.thread
        if ev.event == "acquire":
            assert owner.get(ev.item) is None, f"item {ev.item} double-locked at {ev.timestamp}"
            assert ev.operation == next_op[t]
            owner[ev.item] = t
            held[t].append((ev.operation, ev.item))
            next_op[t] += 1
        elif ev.event == "conflict-abort":
            assert ev.operation == next_op[t]
            assert owner.get(ev.item) not in (None, t)
            for _, x in held.pop(t, []):
                owner[x] = None
            next_op[t] = 1
        else:
            assert owner.get(ev.item) == t
            owner[ev.item] = None
            held[t].remove((ev.operation, ev.item))
            if not held[t]:
                next_op[t] = 1
    return held


@pytest.mark.parametrize("case", ALL_CASES)
def test_trace_replay_respects_mutual_exclusion(case):
    spec = small(case)
    sim = simulate(spec, SimOptions(seed=5, target_commits=1500, warmup_commits=0, record_trace=True))
    times = [ev.timestamp for ev in sim.trace]
    assert times == sorted(times)
    _replay(sim.trace)


def test_trace_access_orders():
    n, s = 4, 4
    for case in ("1.1", "1.2"):
        sim = simulate(small(case), SimOptions(seed=2, target_commits=300, warmup_commits=0, record_trace=True))
        for ev in sim.trace:
            table = ev.item // s
            expected = n - ev.operation if ev.cls == "rev" else ev.operation - 1
            assert table == expected

    sim = simulate(small("2.2"), SimOptions(seed=2, target_commits=300, warmup_commits=0, record_trace=True))
    last = {}
    for ev in sim.trace:
        if ev.event == "acquire":
            if ev.operation > 1:
                assert ev.item > last[ev.thread]
            last[ev.thread] = ev.item


def test_sticky_itemsets_can_livelock():
    # opposite walk orders retrying the same items in lockstep never commit
    with pytest.raises(SimulationError, match="livelock"):
        simulate(small("1.1"), SimOptions(seed=0, target_commits=2000, redraw_on_restart=False))


def test_sticky_itemsets_retry_the_same_items():
    spec = desk("2.1")
    sim = simulate(spec, SimOptions(seed=4, target_commits=500, warmup_commits=0,
                                    redraw_on_restart=False, record_trace=True))
    first_item = {}
    for ev in sim.trace:
        if ev.operation == 1 and ev.event in ("acquire", "conflict-abort"):
            key = ev.thread
            if key in first_item and first_item[key][1] != "release":
                assert ev.item == first_item[key][0]
            first_item[key] = (ev.item, ev.event)
        if ev.event == "release-commit":
            first_item[ev.thread] = (None, "release")


def test_trace_csv(tmp_path):
    sim = simulate(small("1.2"), SimOptions(seed=1, target_commits=20, warmup_commits=0, record_trace=True))
    path = tmp_path / "trace.csv"
    write_trace_csv(sim.trace, path)
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) == len(sim.trace) + 1
    assert all(len(r) == 6 for r in rows)
    assert {r[5] for r in rows[1:]} <= {"acquire", "conflict-abort", "release-commit"}


def test_mixed_order_class_breakdown():
    sim = simulate(small("1.1", m=6), SimOptions(seed=8, target_commits=3000, warmup_commits=100))
    assert [c.name for c in sim.classes] == ["fwd", "rev"]
    assert [c.threads for c in sim.classes] == [3, 3]
    np.testing.assert_array_equal(sum(c.op_aborts for c in sim.classes), sim.op_aborts)


@pytest.mark.parametrize(
    "kwargs", [{"target_commits": 0}, {"warmup_commits": -1}, {"seed": -1}, {"batches": 1}]
)
def test_options_validation(kwargs):
    with pytest.raises(ConfigurationError):
        SimOptions(**kwargs)


def test_invalid_spec():
    with pytest.raises(ConfigurationError):
        simulate(WorkloadSpec.build(2, 10, 3, 1.0, 1.0, "1.2"), SimOptions(target_commits=10))
