"""Fixed-point solution of the coupled visit-count / conflict-probability model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, SolverError
from .markov import LockProfile, OperationProfile, lock_profile
from .patterns import (
    AccessPmf,
    Case,
    DataLayout,
    PatternCase,
    conflict_items_random,
    conflict_items_sorted,
    conflict_tables_mixed_order,
    conflict_tables_same_order,
    order_stat_pmf,
)

logger = logging.getLogger(__name__)

__all__ = [
    "WorkloadSpec",
    "SolverOptions",
    "ClassSolution",
    "ModelSolution",
    "Violation",
    "validate_spec",
    "thread_classes",
    "solve",
]


@dataclass(frozen=True)
class WorkloadSpec:
    m: int
    layout: DataLayout
    profile: OperationProfile
    pattern: PatternCase

    @classmethod
    def build(cls, m, d, n, T, t_C, case, m_fwd=None, m_rev=None) -> "WorkloadSpec":
        """Convenience constructor; ``T`` may be a scalar shared by all operations."""
        T = np.full(n, float(T)) if np.ndim(T) == 0 else np.asarray(T, dtype=float)
        return cls(
            m=m,
            layout=DataLayout(d=d, n=n),
            profile=OperationProfile(T, t_C),
            pattern=PatternCase(case, m_fwd, m_rev),
        )

    def replace(self, **changes) -> "WorkloadSpec":
        """Copy with ``m``, ``d``, ``n`` or ``case`` changed.

        When ``n`` changes, operations keep the first duration of the old
        profile.  A mixed-order split is rebalanced when ``m`` or the case
        changes and no explicit split is given.
        """
        m = changes.pop("m", self.m)
        d = changes.pop("d", self.layout.d)
        n = changes.pop("n", self.layout.n)
        case = Case.parse(changes.pop("case", self.pattern.tag))
        m_fwd = changes.pop("m_fwd", None)
        m_rev = changes.pop("m_rev", None)
        if changes:
            raise TypeError(f"unexpected fields: {sorted(changes)}")
        T = self.profile.T if n == self.layout.n else np.full(n, self.profile.T[0])
        if case is Case.TABLES_MIXED_ORDER and m_fwd is None and m_rev is None:
            if m == self.m and case is self.pattern.tag:
                m_fwd, m_rev = self.pattern.m_fwd, self.pattern.m_rev
            else:
                m_fwd, m_rev = m - m // 2, m // 2
        return WorkloadSpec.build(m, d, n, T, self.profile.t_C, case, m_fwd, m_rev)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


def validate_spec(spec: WorkloadSpec) -> list[Violation]:
    """Every invariant the workload breaks; empty when it is usable."""
    out = []
    m, d, n = spec.m, spec.layout.d, spec.layout.n
    pattern = spec.pattern
    if not _is_count(m, 1):
        out.append(Violation("m-invalid", f"m must be an integer >= 1, got {m}"))
    if not _is_count(d, 1):
        out.append(Violation("d-invalid", f"d must be an integer >= 1, got {d}"))
    if not _is_count(n, 1):
        out.append(Violation("n-invalid", f"n must be an integer >= 1, got {n}"))
    if out:
        return out
    if spec.profile.n != n:
        out.append(Violation("profile-length", f"T has {spec.profile.n} entries but n={n}"))
    if pattern.tag.uses_tables:
        if d % n:
            out.append(Violation("d-not-divisible", f"d not divisible by n (d={d}, n={n})"))
    elif n > d:
        out.append(Violation("n-exceeds-d", f"n exceeds d (n={n}, d={d})"))
    if pattern.tag is Case.TABLES_MIXED_ORDER:
        a, b = pattern.m_fwd, pattern.m_rev
        if not (_is_count(a, 0) and _is_count(b, 0)):
            out.append(Violation("thread-split", f"m_fwd and m_rev must be integers >= 0, got {a}, {b}"))
        elif a + b != m:
            out.append(Violation("thread-split", f"m_fwd + m_rev = {a + b} does not equal m = {m}"))
    return out


def _is_count(v, minimum):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= minimum


def thread_classes(spec: WorkloadSpec) -> list[tuple[str, int]]:
    """``(name, size)`` of every non-empty thread class.

    Only the mixed-order case has two classes: ``fwd`` walks the tables in
    order and ``rev`` walks them backwards.
    """
    if spec.pattern.tag is Case.TABLES_MIXED_ORDER:
        pairs = [("fwd", spec.pattern.m_fwd), ("rev", spec.pattern.m_rev)]
        return [(name, size) for name, size in pairs if size > 0]
    return [("all", spec.m)]


@dataclass(frozen=True)
class SolverOptions:
    epsilon: float = 1e-3
    max_iterations: int = 10_000
    damping: float = 1.0
    clamp: float = 1.0 - 1e-9
    oscillation_window: int = 10

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ConfigurationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not 0 < self.damping <= 1:
            raise ConfigurationError(f"damping must lie in (0, 1], got {self.damping}")
        if not 0 <= self.clamp < 1:
            raise ConfigurationError(f"clamp must lie in [0, 1), got {self.clamp}")


@dataclass(frozen=True)
class ClassSolution:
    name: str
    threads: int
    p: np.ndarray
    N1: np.ndarray
    R: float
    l: np.ndarray
    f: np.ndarray


@dataclass(frozen=True)
class ModelSolution:
    case: Case
    classes: tuple[ClassSolution, ...]
    R: float
    iterations: int
    converged: bool
    residual: float
    saturated: bool = False
    damping: float = 1.0
    oscillation_fallback: bool = False
    pmf: AccessPmf | None = None
    diagnostics: list[str] = field(default_factory=list)

    def by_class(self, name: str) -> ClassSolution:
        for c in self.classes:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def p_max(self) -> float:
        return max(float(c.p.max()) for c in self.classes)


def _next_conflicts(spec, classes, profiles: dict[str, LockProfile], pmf):
    tag = spec.pattern.tag
    m = spec.m
    if tag is Case.TABLES_SAME_ORDER:
        return {"all": conflict_tables_same_order(profiles["all"].f, m, spec.layout.s)}
    if tag is Case.ITEMS_RANDOM:
        return {"all": conflict_items_random(profiles["all"].f, m, spec.layout)}
    if tag is Case.ITEMS_SORTED:
        return {"all": conflict_items_sorted(profiles["all"].f, m, pmf)}
    sizes = dict(classes)
    zeros = np.zeros(spec.layout.n)
    out = {}
    for name, size in classes:
        other = "rev" if name == "fwd" else "fwd"
        f_opp = profiles[other].f if other in profiles else zeros
        out[name] = conflict_tables_mixed_order(
            profiles[name].f, f_opp, size, sizes.get(other, 0), spec.layout.s
        )
    return out


def solve(spec: WorkloadSpec, opts: SolverOptions | None = None) -> ModelSolution:
    """Iterate the model from ``p = 0, R = 0`` until ``|dR| < epsilon``.

    Each iteration evaluates visit counts, response time, lock holding
    times and fractions from the current conflict vector, then derives a new
    conflict vector for the access pattern.  The new vector is blended with
    the old one by ``damping`` and clipped to ``[0, clamp]``.  With two
    thread classes the largest per-class change in ``R`` is the residual.

    The returned quantities are mutually consistent: ``N1``, ``R``, ``l``
    and ``f`` are computed from the returned ``p``.
    """
    opts = opts or SolverOptions()
    violations = validate_spec(spec)
    if violations:
        raise ConfigurationError("invalid workload: " + "; ".join(map(str, violations)), violations)

    classes = thread_classes(spec)
    n = spec.layout.n
    pmf = order_stat_pmf(spec.layout) if spec.pattern.tag is Case.ITEMS_SORTED else None
    diagnostics = []
    if pmf is not None and pmf.renormalized:
        diagnostics.append(f"access pmf renormalized (row drift {pmf.drift:.3g})")

    p = {name: np.zeros(n) for name, _ in classes}
    R_prev = {name: 0.0 for name, _ in classes}
    damping = opts.damping
    saturated = False
    fallback = False
    last_residual = np.inf
    rising = 0
    converged = False

    for it in range(1, opts.max_iterations + 1):
        evaluated = {name: lock_profile(p[name], spec.profile) for name, _ in classes}
        R_now = {name: prof.R for name, (_, prof) in evaluated.items()}
        if not all(np.isfinite(r) for r in R_now.values()):
            raise SolverError(f"non-finite response time at iteration {it}", iteration=it)
        residual = max(abs(R_now[name] - R_prev[name]) for name, _ in classes)
        if residual < opts.epsilon:
            converged = True
            break

        rising = rising + 1 if residual >= last_residual else 0
        last_residual = residual
        if rising >= opts.oscillation_window and damping > 0.5:
            damping = 0.5
            fallback = True
            rising = 0
            diagnostics.append(f"oscillation detected at iteration {it}; damping lowered to 0.5")
            logger.debug("damping fallback at iteration %d", it)

        candidate = _next_conflicts(spec, classes, {k: v[1] for k, v in evaluated.items()}, pmf)
        for name, _ in classes:
            cand = candidate[name]
            if not np.all(np.isfinite(cand)):
                raise SolverError(f"non-finite conflict probability at iteration {it}", iteration=it)
            blended = damping * cand + (1.0 - damping) * p[name]
            if np.any(blended >= opts.clamp):
                saturated = True
            p[name] = np.clip(blended, 0.0, opts.clamp)
        R_prev = R_now

    if not converged:
        evaluated = {name: lock_profile(p[name], spec.profile) for name, _ in classes}
        diagnostics.append(
            f"no convergence after {opts.max_iterations} iterations (last |dR| = {residual:.6g})"
        )
    if saturated:
        diagnostics.append(f"conflict probability reached the clamp {opts.clamp!r}")

    sols = []
    for name, size in classes:
        N1, prof = evaluated[name]
        sols.append(ClassSolution(name, size, p[name], N1, prof.R, prof.l, prof.f))
    R_bar = sum(s.threads * s.R for s in sols) / sum(s.threads for s in sols)
    return ModelSolution(
        case=spec.pattern.tag,
        classes=tuple(sols),
        R=float(R_bar),
        iterations=it,
        converged=converged,
        residual=float(residual),
        saturated=saturated,
        damping=damping,
        oscillation_fallback=fallback,
        pmf=pmf,
        diagnostics=diagnostics,
    )
