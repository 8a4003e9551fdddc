"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 model non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import reports
from .config import FORMATS, RunConfig, load_config
from .exceptions import ConfigurationError, SolverError
from .simulator import simulate, write_trace_csv
from .solver import solve, validate_spec

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3


class _Run:
    """Resolved invocation: config plus output directory and format."""

    def __init__(self, config: RunConfig, out: Path, fmt: str, trace: bool):
        self.config, self.out, self.fmt, self.trace = config, out, fmt, trace

    @property
    def csv(self):
        return self.fmt in ("csv", "both")

    @property
    def json(self):
        return self.fmt in ("json", "both")

    def write(self, name, text):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        path.write_text(text)
        logger.info("wrote %s", path)


def _resolve(args) -> _Run:
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, sim=dataclasses.replace(config.sim, seed=args.seed))
    violations = validate_spec(config.workload)
    if violations:
        raise ConfigurationError("invalid workload", violations)
    out = Path(args.out if args.out is not None else config.output.dir)
    fmt = args.format or config.output.format
    return _Run(config, out, fmt, args.trace or config.output.trace)


def cmd_solve(run: _Run) -> int:
    sol = solve(run.config.workload, run.config.solver)
    if run.csv:
        run.write("solution.csv", reports.solution_csv(sol))
    if run.json:
        run.write("solution.json", reports.dumps(reports.solution_doc(sol, run.config)))
    _summary(f"R = {sol.R:.6g} us after {sol.iterations} iterations", sol)
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def _simulate(run: _Run):
    opts = run.config.sim
    if run.trace and not opts.record_trace:
        opts = dataclasses.replace(opts, record_trace=True)
    sim = simulate(run.config.workload, opts)
    if sim.trace is not None:
        run.out.mkdir(parents=True, exist_ok=True)
        write_trace_csv(sim.trace, run.out / "trace.csv")
    return sim


def cmd_simulate(run: _Run) -> int:
    sim = _simulate(run)
    if run.csv:
        run.write("sim.csv", reports.sim_csv(sim))
    if run.json:
        run.write("sim.json", reports.dumps(reports.sim_doc(sim, run.config)))
    print(f"mean R = {sim.mean_R:.6g} us (+/- {sim.half_width_R:.3g}), "
          f"{sim.commits} commits, {sim.aborts} aborts")
    return EXIT_OK


def cmd_compare(run: _Run) -> int:
    sol = solve(run.config.workload, run.config.solver)
    sim = _simulate(run)
    run.write("compare.csv", reports.compare_csv(sol, sim))
    if run.json:
        doc = {
            "config": run.config.to_dict(),
            "solution": reports.solution_doc(sol),
            "simulation": reports.sim_doc(sim),
        }
        run.write("compare.json", reports.dumps(doc))
    rel = abs(sol.R - sim.mean_R) / sol.R
    _summary(f"R model = {sol.R:.6g} us, simulated = {sim.mean_R:.6g} us, rel diff = {rel:.3%}", sol)
    return EXIT_OK


def sweep_points(config: RunConfig):
    """Every ``(value, case, spec)`` of the sweep, validated up front."""
    sweep = config.sweep
    base = config.workload
    cases = sweep.cases or (base.pattern.tag,)
    points, problems = [], []
    for value in sweep.values:
        for case in cases:
            spec = base.replace(case=case, **{sweep.parameter: value})
            for v in validate_spec(spec):
                problems.append(f"{sweep.parameter}={value}, case {case.label}: {v}")
            points.append((value, case, spec))
    if problems:
        raise ConfigurationError("sweep contains invalid points", problems)
    return points


def cmd_sweep(run: _Run) -> int:
    if run.config.sweep is None:
        raise ConfigurationError("sweep: section is required for the sweep subcommand")
    rows, status = [], EXIT_OK
    for value, case, spec in sweep_points(run.config):
        sol = solve(spec, run.config.solver)
        if not sol.converged:
            status = EXIT_NONCONVERGED
        R_sim = simulate(spec, run.config.sim).mean_R if run.config.sweep.simulate else None
        rows.append((value, case.label, sol.R, R_sim, sol.p_max, sol.iterations))
    run.write("sweep.csv", reports.sweep_csv(rows))
    if run.json:
        keys = reports.SWEEP_COLUMNS
        run.write("sweep.json", reports.dumps([dict(zip(keys, r)) for r in rows]))
    print(f"{len(rows)} sweep points written to {run.out / 'sweep.csv'}")
    return status


def _summary(line, sol):
    print(line)
    for msg in sol.diagnostics:
        print(f"note: {msg}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lockperf",
        description="Lock contention model and simulator for encounter-time 2PL.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("solve", "solve the analytical model"),
        ("simulate", "run the discrete-event simulator"),
        ("compare", "run both and tabulate model vs. simulation"),
        ("sweep", "solve (and optionally simulate) across a parameter sweep"),
        ("echo", "print the parsed configuration as canonical JSON"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (default ./out)")
        p.add_argument("--seed", type=int, default=None, help="override sim.seed")
        p.add_argument("--format", choices=FORMATS, default=None)
        p.add_argument("--trace", action="store_true", help="also write trace.csv (simulate, compare)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


_COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate, "compare": cmd_compare, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "echo":
            print(load_config(args.config).to_json())
            return EXIT_OK
        run = _resolve(args)
        return _COMMANDS[args.command](run)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
