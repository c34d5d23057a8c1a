"""Backward-sweep container and the sweep loop shared by both schemes."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NumericalError, StabilityWarning
from .lattice import Node
from .model import ProblemSpec, check_barriers

__all__ = ["Layer", "SchemeSolution", "sweep", "row_chunks"]

FIELDS = ("y", "z", "u", "v", "a", "k")


@dataclass
class Layer:
    y: np.ndarray
    z: np.ndarray
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    k: np.ndarray


@dataclass
class SchemeSolution:
    """Per-node fields of a solved scheme.

    ``y[j]`` is a ``(j+1, j+1)`` array for ``j = 0..n``; ``z, u, v, a, k`` have entries for
    ``j = 0..n-1`` only.  With ``full=False`` only layer 0 is kept (plus the terminal
    layer of ``y``); the other slots are ``None``.
    """

    problem: ProblemSpec
    scheme: str
    full: bool
    y: list = field(default_factory=list)
    z: list = field(default_factory=list)
    u: list = field(default_factory=list)
    v: list = field(default_factory=list)
    a: list = field(default_factory=list)
    k: list = field(default_factory=list)
    xi: list = field(default_factory=list)
    zeta: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.problem.grid.n

    @property
    def y0(self) -> float:
        return float(self.y[0][0, 0])

    def value(self, name: str, node: Node) -> float:
        arr = getattr(self, name)[node.j]
        if arr is None:
            raise ConfigError(f"layer {node.j} of {name!r} not stored; solve with full=True")
        return float(arr[node.up, node.jumps])

    def require_full(self) -> None:
        if not self.full:
            raise ConfigError("this operation needs a solution computed with full=True")


def row_chunks(nrows: int, threads: int) -> list[slice]:
    threads = max(1, min(int(threads), nrows))
    bounds = np.linspace(0, nrows, threads + 1).astype(int)
    return [slice(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


StepFn = Callable[[ProblemSpec, int, np.ndarray, np.ndarray, np.ndarray, slice], Layer]
Observer = Callable[[int, Layer, np.ndarray, np.ndarray], None]


def _stored(full) -> frozenset:
    if full is True:
        return frozenset(FIELDS + ("xi", "zeta"))
    if not full:
        return frozenset()
    unknown = set(full) - set(FIELDS + ("xi", "zeta"))
    if unknown:
        raise ConfigError(f"unknown solution fields {sorted(unknown)}")
    return frozenset(full)


def sweep(
    prob: ProblemSpec,
    scheme: str,
    step: StepFn,
    full: bool | Sequence[str] = False,
    threads: int = 1,
    warn: bool = True,
    observer: Observer | None = None,
) -> SchemeSolution:
    """Run ``step`` backward from maturity.

    ``full`` keeps every layer (``True``) or only the named fields.  ``observer`` sees
    each finished layer ``(j, layer, xi, zeta)`` and allows streaming diagnostics
    without storage.  Each layer is split into contiguous ``up``-row chunks computed
    concurrently; nodes never read each other's outputs, so results do not depend on
    ``threads``.
    """
    g = prob.grid
    if warn and not prob.is_stable():
        warnings.warn(
            f"stability condition fails: {g.stability_lhs(prob.p, prob.driver.lipschitz):.4g} >= 1 "
            f"(n={g.n}, p={prob.p:g}, C_g={prob.driver.lipschitz:g}); proceeding",
            StabilityWarning,
            stacklevel=3,
        )
    n = g.n
    keep = _stored(full)
    sol = SchemeSolution(problem=prob, scheme=scheme, full=keep == _stored(True))
    for name in FIELDS + ("xi", "zeta"):
        getattr(sol, name).extend([None] * (n + 1))

    xi, zeta = prob.barrier_layer(n)
    check_barriers(xi, zeta, n, terminal=True)
    y_next = np.array(xi, dtype=float)
    sol.y[n] = y_next
    if "xi" in keep:
        sol.xi[n], sol.zeta[n] = xi, zeta

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for j in range(n - 1, -1, -1):
            xi, zeta = prob.barrier_layer(j)
            check_barriers(xi, zeta, j, terminal=False)
            chunks = row_chunks(j + 1, threads)
            if pool is None or len(chunks) == 1:
                layer = step(prob, j, y_next, xi, zeta, slice(0, j + 1))
            else:
                parts = list(pool.map(lambda r: step(prob, j, y_next, xi, zeta, r), chunks))
                layer = Layer(*(np.concatenate([getattr(pt, f) for pt in parts], axis=0) for f in FIELDS))
            if not np.all(np.isfinite(layer.y)):
                up, jumps = np.argwhere(~np.isfinite(layer.y))[0]
                raise NumericalError(f"non-finite value at node (j={j}, up={up}, jumps={jumps})")
            if observer is not None:
                observer(j, layer, xi, zeta)
            for f in FIELDS + ("xi", "zeta"):
                if j == 0 or f in keep:
                    getattr(sol, f)[j] = xi if f == "xi" else zeta if f == "zeta" else getattr(layer, f)
            y_next = layer.y
    finally:
        if pool is not None:
            pool.shutdown()
    return sol
