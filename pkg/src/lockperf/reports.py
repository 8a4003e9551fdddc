"""CSV and JSON renderings of solver, simulator, comparison and sweep results.

Column orders are fixed; floats are written with ``repr`` so files are
byte-identical across runs with the same inputs.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

SOLUTION_COLUMNS = ("case", "class", "i", "p_i", "N1_i", "l_i", "f_i")
SIM_COLUMNS = ("quantity", "class", "i", "value")
COMPARE_COLUMNS = ("quantity", "model", "simulated", "abs_diff", "rel_diff")
SWEEP_COLUMNS = ("sweep_value", "case", "R_model", "R_sim", "p_max", "iterations")

PMF_ECHO_LIMIT = 200_000


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def dumps(doc) -> str:
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


def solution_rows(sol):
    case = sol.case.label
    for c in sol.classes:
        for i in range(c.p.size):
            yield (case, c.name, i + 1, c.p[i], c.N1[i], c.l[i], c.f[i])
    for c in sol.classes:
        yield (case, c.name, "R", c.R, None, None, None)
    yield (case, "*", "R", sol.R, None, None, None)
    yield (case, "*", "iterations", sol.iterations, None, None, None)
    yield (case, "*", "converged", sol.converged, None, None, None)
    yield (case, "*", "residual", sol.residual, None, None, None)
    yield (case, "*", "saturated", sol.saturated, None, None, None)


def solution_csv(sol) -> str:
    return _csv(SOLUTION_COLUMNS, solution_rows(sol))


def solution_doc(sol, config=None) -> dict:
    doc = {
        "case": sol.case.value,
        "case_label": sol.case.label,
        "R": sol.R,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "residual": sol.residual,
        "saturated": sol.saturated,
        "damping": sol.damping,
        "oscillation_fallback": sol.oscillation_fallback,
        "diagnostics": list(sol.diagnostics),
        "classes": [
            {"name": c.name, "threads": c.threads, "R": c.R, "p": c.p, "N1": c.N1, "l": c.l, "f": c.f}
            for c in sol.classes
        ],
    }
    if sol.pmf is not None:
        pmf = {"drift": sol.pmf.drift, "renormalized": sol.pmf.renormalized}
        if sol.pmf.probs.size <= PMF_ECHO_LIMIT:
            pmf["probs"] = sol.pmf.probs
        doc["access_pmf"] = pmf
    if config is not None:
        doc = {"config": config.to_dict(), "solution": doc}
    return doc


def sim_rows(sim):
    groups = [("*", sim)] + ([(c.name, c) for c in sim.classes] if len(sim.classes) > 1 else [])
    for name, g in groups:
        yield ("mean_R", name, None, g.mean_R)
        yield ("half_width_R", name, None, g.half_width_R)
        yield ("commits", name, None, g.commits)
        yield ("aborts", name, None, g.aborts)
        for i, v in enumerate(g.p_hat):
            yield ("p_hat", name, i + 1, v)
        for i, v in enumerate(g.f_hat):
            yield ("f_hat", name, i + 1, v)
    yield ("seed", "*", None, sim.seed)
    yield ("prng", "*", None, sim.prng)


def sim_csv(sim) -> str:
    return _csv(SIM_COLUMNS, sim_rows(sim))


def _sim_group(g):
    return {
        "mean_R": g.mean_R,
        "half_width_R": g.half_width_R,
        "commits": g.commits,
        "aborts": g.aborts,
        "attempts": g.attempts,
        "op_aborts": g.op_aborts,
        "p_hat": g.p_hat,
        "f_hat": g.f_hat,
    }


def sim_doc(sim, config=None) -> dict:
    doc = _sim_group(sim)
    doc.update(seed=sim.seed, prng=sim.prng, end_time=sim.end_time)
    doc["classes"] = [dict(name=c.name, threads=c.threads, **_sim_group(c)) for c in sim.classes]
    if config is not None:
        doc = {"config": config.to_dict(), "simulation": doc}
    return doc


def compare_rows(sol, sim):
    multi = len(sol.classes) > 1

    def row(q, a, b):
        a, b = float(a), float(b)
        diff = abs(a - b)
        rel = diff / abs(a) if a != 0 else (0.0 if diff == 0 else math.inf)
        return (q, a, b, diff, rel)

    yield row("R", sol.R, sim.mean_R)
    for c in sol.classes:
        sc = sim.by_class(c.name)
        tag = f"[{c.name}]" if multi else ""
        if multi:
            yield row(f"R{tag}", c.R, sc.mean_R)
        for i in range(c.p.size):
            yield row(f"p_{i + 1}{tag}", c.p[i], sc.p_hat[i])
        for i in range(c.f.size):
            yield row(f"f_{i + 1}{tag}", c.f[i], sc.f_hat[i])
    yield ("model_converged", sol.converged, None, None, None)
    yield ("model_saturated", sol.saturated, None, None, None)


def compare_csv(sol, sim) -> str:
    return _csv(COMPARE_COLUMNS, compare_rows(sol, sim))


def sweep_csv(rows) -> str:
    return _csv(SWEEP_COLUMNS, rows)
