"""Oracle-assisted synthesis of n-qubit pure states.

A classical planner decomposes a target state into a short sequence of
sign-pattern states (stabilizer-style for general targets, hashed binary
phase states for real ones), serializes the plan as a phase oracle, and a
family of simulated drivers re-create the state with postselection, one
query, four queries (clean), or ten queries (in-place).
"""

from __future__ import annotations

from .executors import (
    ExecutionReport,
    OracleMismatchError,
    PostselectCircuit,
    four_query_diagnostics,
    query_substitution_bound,
    run_four_query,
    run_four_query_dense,
    run_one_query,
    run_one_query_dense,
    run_postselect,
    run_ten_query,
)
from .numerics import (
    DensityMatrix,
    PureState,
    haar_random_state,
    trace_distance_mixed,
    trace_distance_pure,
)
from .synthesis import (
    OracleSpec,
    SynthesisParams,
    SynthesisPlan,
    build_plan,
    derive_hash_params,
    derive_params,
    nominal_success_amplitude,
    plan_to_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "ExecutionReport",
    "OracleMismatchError",
    "OracleSpec",
    "PostselectCircuit",
    "PureState",
    "SynthesisParams",
    "SynthesisPlan",
    "build_plan",
    "derive_hash_params",
    "derive_params",
    "four_query_diagnostics",
    "haar_random_state",
    "nominal_success_amplitude",
    "plan_to_oracle",
    "query_substitution_bound",
    "run_four_query",
    "run_four_query_dense",
    "run_one_query",
    "run_one_query_dense",
    "run_postselect",
    "run_ten_query",
    "trace_distance_mixed",
    "trace_distance_pure",
    "__version__",
]
