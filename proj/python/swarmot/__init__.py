"""Python front end for the swarmot C++ core."""

from ._swarmot import (
    Density,
    InvalidInput,
    NumericalError,
    QuantileFunction,
    ScalarSolution,
    Solution,
    averaged_density,
    gaussian_mixture,
    partition_cells,
    plan_cost,
    quantile_of,
    riccati,
    run,
    solve_config,
    solve_scalar,
    squared_wasserstein2,
    wasserstein2,
)

__all__ = [
    "Density",
    "InvalidInput",
    "NumericalError",
    "QuantileFunction",
    "ScalarSolution",
    "Solution",
    "averaged_density",
    "gaussian_mixture",
    "partition_cells",
    "plan_cost",
    "quantile_of",
    "riccati",
    "run",
    "solve_config",
    "solve_scalar",
    "squared_wasserstein2",
    "wasserstein2",
]
