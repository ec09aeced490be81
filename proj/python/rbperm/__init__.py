"""Block-restricted permutation two-sample tests."""

from ._rbperm import (
    DiagnosticsReport,
    RbpermError,
    TestResult,
    diagnose,
    effective_resolution,
    freedman_tail,
    mean_diff,
    median_heuristic,
    mmd2,
    quantile_bound,
    rho_feasibility,
    rho_recommend,
    simulate,
    table1,
    test,
)

__all__ = [
    "DiagnosticsReport",
    "RbpermError",
    "TestResult",
    "diagnose",
    "effective_resolution",
    "freedman_tail",
    "mean_diff",
    "median_heuristic",
    "mmd2",
    "quantile_bound",
    "rho_feasibility",
    "rho_recommend",
    "simulate",
    "table1",
    "test",
]
