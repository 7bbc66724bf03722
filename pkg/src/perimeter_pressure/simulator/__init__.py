from ._kernels import USING_NUMBA, numba_requested
from .core import Assignment, Metrics, SimState, path_assignment, run_scenario, step

__all__ = [
    "Assignment",
    "Metrics",
    "SimState",
    "USING_NUMBA",
    "numba_requested",
    "path_assignment",
    "run_scenario",
    "step",
]
