import csv
import json

import pytest

from lockperf.cli import main
from lockperf.config import load_config, parse_config
from lockperf.exceptions import ConfigurationError

BASE = {
    "workload": {"m": 8, "d": 1024, "n": 8, "T_uniform": 10, "t_C": 10, "case": "items-sorted"},
    "sim": {"seed": 7, "target_commits": 3000, "warmup_commits": 300},
}


def write_config(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def with_workload(**changes):
    doc = json.loads(json.dumps(BASE))
    doc["workload"].update(changes)
    return doc


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def header(path):
    with open(path) as fh:
        return fh.readline().strip()


def run(tmp_path, command, doc, *extra):
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "out"
    return main([command, "--config", str(cfg), "--out", str(out), *extra]), out


class TestConfig:
    def test_round_trip(self, tmp_path):
        doc = with_workload(case="1.1", m_fwd=3, m_rev=5, T=[1, 2, 3, 4, 5, 6, 7, 8])
        del doc["workload"]["T_uniform"]
        doc["sweep"] = {"parameter": "m", "values": [2, 4], "cases": ["2.1", "2.2"]}
        first = parse_config(doc)
        second = parse_config(json.loads(first.to_json()))
        assert first.to_dict() == second.to_dict()
        assert second.workload.pattern.m_fwd == 3
        assert second.workload.profile.T.tolist() == [1, 2, 3, 4, 5, 6, 7, 8]

    def test_echo_is_reparseable(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE)
        assert main(["echo", "--config", str(cfg)]) == 0
        echoed = capsys.readouterr().out
        assert parse_config(json.loads(echoed)).to_dict() == load_config(cfg).to_dict()

    def test_mixed_split_defaults_to_even(self):
        cfg = parse_config(with_workload(case="1.1", m=7))
        assert (cfg.workload.pattern.m_fwd, cfg.workload.pattern.m_rev) == (4, 3)

    @pytest.mark.parametrize(
        "doc, field",
        [
            (with_workload(case="3.3"), "workload.case"),
            (with_workload(T=[1] * 8), "workload.T"),
            (with_workload(time_unit="ms"), "workload.time_unit"),
            (with_workload(m=0), "workload.m"),
            (with_workload(bogus=1), "workload.bogus"),
            ({**BASE, "sim": {"target_commits": 0}}, "sim"),
            ({**BASE, "solver": {"damping": 2}}, "solver"),
            ({**BASE, "sweep": {"parameter": "x", "values": [1]}}, "sweep.parameter"),
            ({**BASE, "output": {"format": "xml"}}, "output.format"),
        ],
    )
    def test_errors_name_the_field(self, doc, field):
        with pytest.raises(ConfigurationError, match=field.replace(".", r"\.")):
            parse_config(doc)


class TestSolve:
    def test_single_thread(self, tmp_path):
        code, out = run(tmp_path, "solve", with_workload(m=1))
        assert code == 0
        rows = read_csv(out / "solution.csv")
        assert all(float(r["p_i"]) == 0 for r in rows if r["i"].isdigit())
        total = [r for r in rows if r["class"] == "*" and r["i"] == "R"]
        assert float(total[0]["p_i"]) == 90.0

    def test_pmf_echo(self, tmp_path):
        code, out = run(tmp_path, "solve", with_workload(m=2, d=4, n=2, T_uniform=5))
        assert code == 0
        doc = json.loads((out / "solution.json").read_text())
        pmf = doc["solution"]["access_pmf"]["probs"]
        assert pmf[0] == pytest.approx([1 / 2, 1 / 3, 1 / 6, 0], abs=1e-12)
        assert pmf[1] == pytest.approx([0, 1 / 6, 1 / 3, 1 / 2], abs=1e-12)
        assert doc["config"]["workload"]["case"] == "items-sorted"

    def test_malformed_case(self, tmp_path, capsys):
        code, _ = run(tmp_path, "solve", with_workload(case="sideways"))
        assert code == 2
        assert "workload.case" in capsys.readouterr().err

    def test_invalid_spec_lists_violations(self, tmp_path, capsys):
        code, _ = run(tmp_path, "solve", with_workload(case="1.2", d=10, n=3, T_uniform=1))
        assert code == 2
        assert "d-not-divisible" in capsys.readouterr().err

    def test_non_convergence_exit_code(self, tmp_path):
        doc = {**BASE, "solver": {"max_iterations": 1}}
        code, out = run(tmp_path, "solve", doc)
        assert code == 3
        assert (out / "solution.csv").exists()
        assert json.loads((out / "solution.json").read_text())["solution"]["converged"] is False

    def test_format_flag(self, tmp_path):
        code, out = run(tmp_path, "solve", BASE, "--format", "json")
        assert code == 0
        assert (out / "solution.json").exists() and not (out / "solution.csv").exists()


class TestSimulate:
    def test_single_thread_matches_model(self, tmp_path):
        code, out = run(tmp_path, "simulate", with_workload(m=1))
        assert code == 0
        rows = read_csv(out / "sim.csv")
        mean = [r for r in rows if r["quantity"] == "mean_R"][0]
        assert float(mean["value"]) == 90.0

    def test_byte_identical_reruns(self, tmp_path):
        _, out = run(tmp_path, "simulate", BASE)
        first = (out / "sim.csv").read_bytes()
        _, out = run(tmp_path, "simulate", BASE)
        assert (out / "sim.csv").read_bytes() == first
        _, out = run(tmp_path, "simulate", BASE, "--seed", "8")
        assert (out / "sim.csv").read_bytes() != first

    def test_zero_commits(self, tmp_path):
        code, _ = run(tmp_path, "simulate", {**BASE, "sim": {"target_commits": 0}})
        assert code == 2

    def test_trace_opt_in(self, tmp_path):
        doc = {**BASE, "sim": {"target_commits": 50, "warmup_commits": 0}}
        code, out = run(tmp_path, "simulate", doc)
        assert not (out / "trace.csv").exists()
        code, out = run(tmp_path, "simulate", doc, "--trace")
        assert header(out / "trace.csv") == "timestamp_us,thread,class,operation,item,event"


class TestCompare:
    def test_single_thread_has_no_differences(self, tmp_path):
        code, out = run(tmp_path, "compare", with_workload(m=1))
        assert code == 0
        rows = [r for r in read_csv(out / "compare.csv") if r["rel_diff"]]
        assert rows and all(float(r["rel_diff"]) == 0 for r in rows)

    def test_saturated_model_is_flagged(self, tmp_path):
        doc = {
            "workload": {"m": 4, "d": 4, "n": 2, "T_uniform": 10, "t_C": 10, "case": "1.2"},
            "sim": {"target_commits": 500, "warmup_commits": 0},
        }
        code, out = run(tmp_path, "compare", doc)
        assert code == 0
        flags = {r["quantity"]: r["model"] for r in read_csv(out / "compare.csv")}
        assert flags["model_saturated"] == "true"

    def test_mixed_order_rows_are_per_class(self, tmp_path):
        code, out = run(tmp_path, "compare", with_workload(case="1.1"))
        names = [r["quantity"] for r in read_csv(out / "compare.csv")]
        assert "R[fwd]" in names and "p_8[rev]" in names and "f_1[fwd]" in names


class TestSweep:
    def test_sorted_never_slower_than_random(self, tmp_path):
        doc = {**BASE, "sweep": {"parameter": "m", "values": [1, 2, 4, 8], "cases": ["2.1", "2.2"]}}
        code, out = run(tmp_path, "sweep", doc)
        assert code == 0
        rows = read_csv(out / "sweep.csv")
        assert len(rows) == 8
        R = {(r["sweep_value"], r["case"]): float(r["R_model"]) for r in rows}
        for m in ("1", "2", "4", "8"):
            assert R[(m, "2.2")] <= R[(m, "2.1")]

    def test_single_point_matches_solve(self, tmp_path):
        doc = {**BASE, "sweep": {"parameter": "m", "values": [8]}}
        run(tmp_path, "sweep", doc)
        sweep_row = read_csv(tmp_path / "out" / "sweep.csv")[0]
        run(tmp_path, "solve", doc)
        total = [r for r in read_csv(tmp_path / "out" / "solution.csv") if r["class"] == "*"]
        summary = {r["i"]: r["p_i"] for r in total}
        assert sweep_row["R_model"] == summary["R"]
        assert sweep_row["iterations"] == summary["iterations"]
        assert sweep_row["R_sim"] == ""

    def test_with_simulation(self, tmp_path):
        doc = {**BASE, "sweep": {"parameter": "d", "values": [512, 1024], "simulate": True}}
        code, out = run(tmp_path, "sweep", doc)
        assert code == 0
        assert all(float(r["R_sim"]) > 0 for r in read_csv(out / "sweep.csv"))

    def test_invalid_point(self, tmp_path):
        doc = with_workload(case="1.2")
        doc["sweep"] = {"parameter": "n", "values": [8, 7]}
        code, out = run(tmp_path, "sweep", doc)
        assert code == 2
        assert not (out / "sweep.csv").exists()

    def test_missing_section(self, tmp_path):
        assert run(tmp_path, "sweep", BASE)[0] == 2


def test_csv_headers_are_pinned(tmp_path):
    doc = {**BASE, "sweep": {"parameter": "m", "values": [2]}}
    for command in ("solve", "simulate", "compare", "sweep"):
        run(tmp_path, command, doc)
    out = tmp_path / "out"
    assert header(out / "solution.csv") == "case,class,i,p_i,N1_i,l_i,f_i"
    assert header(out / "sim.csv") == "quantity,class,i,value"
    assert header(out / "compare.csv") == "quantity,model,simulated,abs_diff,rel_diff"
    assert header(out / "sweep.csv") == "sweep_value,case,R_model,R_sim,p_max,iterations"
