"""Penalized random-walk schemes for doubly reflected BSDEs with jumps."""

from .errors import ConfigError, InvariantViolation, ModelError, NumericalError, StabilityWarning
from .explicit import explicit_step, solve_explicit
from .implicit import RootFindConfig, invert_theta, solve_implicit, theta
from .lattice import Branch, GridSpec, Node, increment_moments, make_grid, successors
from .model import BarrierPair, Driver, PathBarriers, ProblemSpec, example1, example2, unconstrained
from .solution import SchemeSolution

__version__ = "0.1.0"

__all__ = [
    "BarrierPair",
    "Branch",
    "ConfigError",
    "Driver",
    "GridSpec",
    "InvariantViolation",
    "ModelError",
    "Node",
    "NumericalError",
    "PathBarriers",
    "ProblemSpec",
    "RootFindConfig",
    "SchemeSolution",
    "StabilityWarning",
    "example1",
    "example2",
    "explicit_step",
    "increment_moments",
    "invert_theta",
    "make_grid",
    "solve_explicit",
    "solve_implicit",
    "successors",
    "theta",
    "unconstrained",
]
