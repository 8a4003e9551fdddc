"""Analytical lock-contention model for encounter-time two-phase locking,
with a discrete-event simulator of the same discipline for validation."""

from .exceptions import (
    ConfigurationError,
    LockPerfError,
    ModelError,
    SimulationError,
    SolverError,
)
from .markov import (
    LockProfile,
    OperationProfile,
    lock_fractions,
    lock_holding_times,
    response_time,
    visit_counts,
    visit_counts_reference,
)
from .patterns import (
    AccessPmf,
    Case,
    DataLayout,
    PatternCase,
    avg_fraction,
    conflict_items_random,
    conflict_items_sorted,
    conflict_tables_mixed_order,
    conflict_tables_same_order,
    order_stat_pmf,
    order_stat_pmf_oracle,
)
from .simulator import SimOptions, SimResult, empirical_lock_fractions, simulate
from .solver import (
    ModelSolution,
    SolverOptions,
    Violation,
    WorkloadSpec,
    solve,
    validate_spec,
)

__version__ = "0.1.0"
