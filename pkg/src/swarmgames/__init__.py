"""Task allocation and simulation for robot collectives.

The package splits into a game-theoretic core (`allocation`, `linalg`),
a safety layer (`cbf`), scenario configuration (`scenarios`), the
simulation engine (`sim`), and a command-line front end (`cli`).
"""

from .allocation import (
    AllocationError,
    AllocationResult,
    EquilibriumReport,
    MixedStrategy,
    NoIdleRobots,
    ProblemInstance,
    allocate,
    expected_task_count,
    expected_utility,
    sample_assignment,
    signal_range,
    solve_hetero_idle,
    solve_hetero_noidle,
    solve_homogeneous_idle,
    solve_homogeneous_noidle,
    verify_equilibrium,
)
from .linalg import SingularSystem, solve_linear

__all__ = [
    "AllocationError",
    "AllocationResult",
    "EquilibriumReport",
    "MixedStrategy",
    "NoIdleRobots",
    "ProblemInstance",
    "SingularSystem",
    "allocate",
    "expected_task_count",
    "expected_utility",
    "sample_assignment",
    "signal_range",
    "solve_hetero_idle",
    "solve_hetero_noidle",
    "solve_homogeneous_idle",
    "solve_homogeneous_noidle",
    "solve_linear",
    "verify_equilibrium",
]

__version__ = "0.1.0"
