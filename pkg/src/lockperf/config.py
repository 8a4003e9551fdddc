"""JSON run configuration shared by the command-line subcommands.

All times are microseconds.  A minimal document::

    {
      "workload": {"m": 8, "d": 1024, "n": 8, "T_uniform": 10, "t_C": 10,
                   "case": "items-sorted"},
      "solver": {"epsilon": 0.001},
      "sim": {"seed": 1, "target_commits": 100000, "warmup_commits": 10000},
      "sweep": {"parameter": "m", "values": [1, 2, 4, 8],
                "cases": ["items-random", "items-sorted"]},
      "output": {"dir": "out", "format": "both", "trace": false}
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .exceptions import ConfigurationError, ModelError
from .patterns import Case
from .simulator import SimOptions
from .solver import SolverOptions, WorkloadSpec

__all__ = ["RunConfig", "SweepConfig", "OutputConfig", "load_config", "parse_config"]

TIME_UNIT = "us"
SWEEP_PARAMETERS = ("m", "n", "d")
FORMATS = ("csv", "json", "both")

_WORKLOAD_KEYS = {"m", "d", "n", "T", "T_uniform", "t_C", "case", "m_fwd", "m_rev", "time_unit"}


@dataclass(frozen=True)
class SweepConfig:
    parameter: str
    values: tuple[int, ...]
    cases: tuple[Case, ...] = ()
    simulate: bool = False


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    format: str = "both"
    trace: bool = False


@dataclass(frozen=True)
class RunConfig:
    workload: WorkloadSpec
    solver: SolverOptions = field(default_factory=SolverOptions)
    sim: SimOptions = field(default_factory=SimOptions)
    sweep: SweepConfig | None = None
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        w = self.workload
        T = w.profile.T.tolist()
        workload = {"time_unit": TIME_UNIT, "m": w.m, "d": w.layout.d, "n": w.layout.n}
        if len(set(T)) == 1:
            workload["T_uniform"] = T[0]
        else:
            workload["T"] = T
        workload["t_C"] = w.profile.t_C
        workload["case"] = w.pattern.tag.value
        if w.pattern.tag is Case.TABLES_MIXED_ORDER:
            workload["m_fwd"] = w.pattern.m_fwd
            workload["m_rev"] = w.pattern.m_rev
        out = {
            "workload": workload,
            "solver": asdict(self.solver),
            "sim": asdict(self.sim),
            "output": asdict(self.output),
        }
        if self.sweep is not None:
            out["sweep"] = {
                "parameter": self.sweep.parameter,
                "values": list(self.sweep.values),
                "cases": [c.value for c in self.sweep.cases],
                "simulate": self.sweep.simulate,
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _fail(path, message):
    raise ConfigurationError(f"{path}: {message}")


def _int(v, path, minimum=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        _fail(path, f"expected an integer, got {v!r}")
    v = int(v)
    if minimum is not None and v < minimum:
        _fail(path, f"must be >= {minimum}, got {v}")
    return v


def _num(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, f"expected a number, got {v!r}")
    return float(v)


def _bool(v, path):
    if not isinstance(v, bool):
        _fail(path, f"expected true or false, got {v!r}")
    return v


def _section(doc, name, allowed, required=False):
    sec = doc.get(name)
    if sec is None:
        if required:
            _fail(name, "section is required")
        return {}
    if not isinstance(sec, dict):
        _fail(name, "expected an object")
    unknown = set(sec) - set(allowed)
    if unknown:
        _fail(f"{name}.{sorted(unknown)[0]}", "unknown field")
    return sec


def _parse_case(v, path):
    try:
        return Case.parse(v)
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_workload(doc) -> WorkloadSpec:
    w = _section(doc, "workload", _WORKLOAD_KEYS, required=True)
    unit = w.get("time_unit", TIME_UNIT)
    if unit != TIME_UNIT:
        _fail("workload.time_unit", f"only {TIME_UNIT!r} is supported, got {unit!r}")
    for key in ("m", "d", "n", "t_C", "case"):
        if key not in w:
            _fail(f"workload.{key}", "field is required")
    m = _int(w["m"], "workload.m", 1)
    d = _int(w["d"], "workload.d", 1)
    n = _int(w["n"], "workload.n", 1)
    t_C = _num(w["t_C"], "workload.t_C")
    case = _parse_case(w["case"], "workload.case")
    if ("T" in w) == ("T_uniform" in w):
        _fail("workload.T", "give exactly one of T (list) or T_uniform (number)")
    if "T" in w:
        T = w["T"]
        if not isinstance(T, list) or len(T) != n:
            _fail("workload.T", f"expected a list of {n} numbers")
        T = [_num(v, f"workload.T[{k}]") for k, v in enumerate(T)]
    else:
        T = [_num(w["T_uniform"], "workload.T_uniform")] * n
    m_fwd = m_rev = None
    if case is Case.TABLES_MIXED_ORDER:
        if "m_fwd" in w or "m_rev" in w:
            m_fwd = _int(w.get("m_fwd", m - w.get("m_rev", 0)), "workload.m_fwd", 0)
            m_rev = _int(w.get("m_rev", m - m_fwd), "workload.m_rev", 0)
        else:
            m_fwd, m_rev = m - m // 2, m // 2
    try:
        return WorkloadSpec.build(m, d, n, T, t_C, case, m_fwd, m_rev)
    except ModelError as exc:
        _fail("workload", str(exc))


def _options(cls, doc, name):
    names = {f.name for f in fields(cls)}
    sec = _section(doc, name, names)
    try:
        return cls(**sec)
    except (TypeError, ConfigurationError) as exc:
        _fail(name, str(exc))


def _parse_sweep(doc):
    if doc.get("sweep") is None:
        return None
    sec = _section(doc, "sweep", {"parameter", "values", "cases", "simulate"})
    param = sec.get("parameter")
    if param not in SWEEP_PARAMETERS:
        _fail("sweep.parameter", f"expected one of {SWEEP_PARAMETERS}, got {param!r}")
    values = sec.get("values")
    if not isinstance(values, list) or not values:
        _fail("sweep.values", "expected a non-empty list")
    values = tuple(_int(v, f"sweep.values[{k}]", 1) for k, v in enumerate(values))
    cases = tuple(_parse_case(c, f"sweep.cases[{k}]") for k, c in enumerate(sec.get("cases", [])))
    return SweepConfig(param, values, cases, _bool(sec.get("simulate", False), "sweep.simulate"))


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigurationError("config: expected a JSON object")
    unknown = set(doc) - {"workload", "solver", "sim", "sweep", "output"}
    if unknown:
        _fail(sorted(unknown)[0], "unknown section")
    output = _options(OutputConfig, doc, "output")
    if output.format not in FORMATS:
        _fail("output.format", f"expected one of {FORMATS}, got {output.format!r}")
    return RunConfig(
        workload=_parse_workload(doc),
        solver=_options(SolverOptions, doc, "solver"),
        sim=_options(SimOptions, doc, "sim"),
        sweep=_parse_sweep(doc),
        output=output,
    )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)
