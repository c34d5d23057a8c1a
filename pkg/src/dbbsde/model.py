"""Drivers, barrier pairs and the built-in problems.

Driver and barrier callables are evaluated on whole lattice layers, so they must accept
numpy arrays (broadcasting elementwise) as well as plain floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, ModelError
from .lattice import GridSpec, layer_coordinates

__all__ = [
    "Driver",
    "BarrierPair",
    "PathBarriers",
    "ProblemSpec",
    "example_driver",
    "zero_driver",
    "example1",
    "example2",
    "unconstrained",
    "check_barriers",
]

DriverFn = Callable[..., "np.ndarray | float"]
BarrierFn = Callable[..., "np.ndarray | float"]


@dataclass(frozen=True)
class Driver:
    eval: DriverFn
    lipschitz: float
    name: str = "custom"

    def __call__(self, t, y, z, u):
        return self.eval(t, y, z, u)


@dataclass(frozen=True)
class BarrierPair:
    """Markovian obstacles ``lower(t, w, ntilde)`` (xi) and ``upper(t, w, ntilde)`` (zeta)."""

    lower: BarrierFn
    upper: BarrierFn

    def evaluate(self, t: float, w, nt) -> tuple[np.ndarray, np.ndarray]:
        shape = np.broadcast(w, nt).shape
        lo = np.broadcast_to(np.asarray(self.lower(t, w, nt), dtype=float), shape)
        hi = np.broadcast_to(np.asarray(self.upper(t, w, nt), dtype=float), shape)
        return lo, hi


@dataclass(frozen=True)
class PathBarriers:
    """Path-dependent obstacles, only usable with the path-tree oracle.

    Both callables receive ``(t, w_hist, nt_hist)`` where the histories have shape
    ``(paths, j + 1)`` and hold ``W`` and ``Ntilde`` at times ``t_0 .. t_j``.
    """

    lower: BarrierFn
    upper: BarrierFn

    def evaluate(self, t: float, w_hist: np.ndarray, nt_hist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        shape = w_hist.shape[:1]
        lo = np.broadcast_to(np.asarray(self.lower(t, w_hist, nt_hist), dtype=float), shape)
        hi = np.broadcast_to(np.asarray(self.upper(t, w_hist, nt_hist), dtype=float), shape)
        return lo, hi


@dataclass(frozen=True)
class ProblemSpec:
    grid: GridSpec
    driver: Driver
    barriers: BarrierPair | PathBarriers
    p: float
    name: str = "custom"

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 0:
            raise ConfigError(f"penalization parameter must be >= 0, got {self.p!r}")
        if self.driver.lipschitz < 0:
            raise ConfigError("declared Lipschitz constant must be nonnegative")
        object.__setattr__(self, "p", float(self.p))

    @property
    def markovian(self) -> bool:
        return isinstance(self.barriers, BarrierPair)

    @property
    def p_delta(self) -> float:
        return self.p * self.grid.delta

    def is_stable(self) -> bool:
        return self.grid.is_stable(self.p, self.driver.lipschitz)

    def with_p(self, p: float) -> "ProblemSpec":
        return ProblemSpec(self.grid, self.driver, self.barriers, p, self.name)

    def barrier_layer(self, j: int, rows: slice | None = None) -> tuple[np.ndarray, np.ndarray]:
        if not self.markovian:
            raise ConfigError("path-dependent barriers are only supported by the path-tree oracle")
        t, w, nt = layer_coordinates(self.grid, j, rows)
        return self.barriers.evaluate(t, w, nt)


def _example_g(t, y, z, u):
    return -5.0 * np.abs(y + z) + 6.0 * u


def example_driver() -> Driver:
    """g(t, y, z, u) = -5|y + z| + 6u with the conservative constant C_g = 6."""
    return Driver(_example_g, 6.0, "-5|y+z|+6u")


def _zero_g(t, y, z, u):
    return 0.0 * y


def zero_driver() -> Driver:
    return Driver(_zero_g, 0.0, "0")


def example1(grid: GridSpec, p: float = 0.0) -> ProblemSpec:
    T = grid.T

    def lower(t, w, nt):
        return w * w + nt + (T - t)

    def upper(t, w, nt):
        return w * w + nt + 3.0 * (T - t)

    return ProblemSpec(grid, example_driver(), BarrierPair(lower, upper), p, "example1")


def example2(grid: GridSpec, a: float, p: float = 0.0) -> ProblemSpec:
    T = grid.T
    a = float(a)

    def lower(t, w, nt):
        return w * w + nt + (T - t) * (1.0 - np.where(w >= a, 1.0, 0.0))

    def upper(t, w, nt):
        return w * w + nt + (T - t) * (2.0 + np.where(w >= a, 1.0, 0.0))

    return ProblemSpec(grid, example_driver(), BarrierPair(lower, upper), p, f"example2(a={a:g})")


def unconstrained(
    grid: GridSpec,
    terminal: BarrierFn,
    driver: Driver | None = None,
    M: float = 1e6,
    p: float = 0.0,
) -> ProblemSpec:
    """Barriers at -M / +M before maturity and equal to ``terminal(t, w, nt)`` at T.

    ``M`` must exceed every value the scheme reaches, so the penalty never fires.
    """
    driver = driver or zero_driver()
    T = grid.T

    def lower(t, w, nt):
        if t >= T:
            return terminal(t, w, nt)
        return np.full(np.broadcast(w, nt).shape, -M)

    def upper(t, w, nt):
        if t >= T:
            return terminal(t, w, nt)
        return np.full(np.broadcast(w, nt).shape, M)

    return ProblemSpec(grid, driver, BarrierPair(lower, upper), p, "unconstrained")


def check_barriers(xi: np.ndarray, zeta: np.ndarray, j: int, terminal: bool) -> None:
    """Raise ModelError unless xi <= zeta on the layer (and xi == zeta at maturity)."""
    bad = xi > zeta
    if np.any(bad):
        up, jumps = np.argwhere(bad)[0]
        raise ModelError(
            f"lower barrier above upper barrier at node (j={j}, up={up}, jumps={jumps}): "
            f"{xi[up, jumps]!r} > {zeta[up, jumps]!r}"
        )
    if terminal and np.any(xi != zeta):
        up, jumps = np.argwhere(xi != zeta)[0]
        raise ModelError(f"barriers differ at maturity, node (j={j}, up={up}, jumps={jumps})")
