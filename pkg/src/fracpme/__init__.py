"""Solver and verification harness for the fractional-time nonlocal porous
medium equation d_t^gamma w + (-Delta)^s(|w|^(m-1) w) = f on a periodic grid."""

from .fracops import (
    History,
    Params,
    SpaceKernelBounds,
    TimeKernelBounds,
    frac_laplacian,
    kernel_laplacian,
    marchaud_apply,
    marchaud_weights,
    mittag_leffler,
)
from .grid import Field, Grid, integrate, inverse_transform, transform
from .stepper import NonConvergence, NonlinearityPhi, StepResult, resolvent, solve, step

__version__ = "0.1.0"

__all__ = [
    "Field",
    "Grid",
    "History",
    "NonConvergence",
    "NonlinearityPhi",
    "Params",
    "SpaceKernelBounds",
    "StepResult",
    "TimeKernelBounds",
    "frac_laplacian",
    "integrate",
    "inverse_transform",
    "kernel_laplacian",
    "marchaud_apply",
    "marchaud_weights",
    "mittag_leffler",
    "resolvent",
    "solve",
    "step",
    "transform",
]
