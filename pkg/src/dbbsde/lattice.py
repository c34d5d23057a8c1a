"""Recombining lattice for the joint Brownian / compensated-Poisson random walk.

One step draws a sign ``e`` (+1 or -1 with probability 1/2 each) and, independently,
a jump indicator: no jump with probability ``kappa = exp(-lambda * delta)`` (increment
``eta = kappa - 1``) or a jump with probability ``1 - kappa`` (increment ``eta = kappa``).
Because every problem handled here depends on ``(t, W, Ntilde)`` only, the state after
``j`` steps collapses to ``(j, up, jumps)`` and layer ``j`` is a dense
``(j + 1) x (j + 1)`` array indexed ``[up, jumps]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from numbers import Integral, Real

import numpy as np
from scipy.stats import binom

from .errors import ConfigError

__all__ = [
    "GridSpec",
    "Node",
    "Branch",
    "make_grid",
    "successors",
    "increment_moments",
    "BRANCHES",
    "layer_size",
    "total_nodes",
    "layer_coordinates",
    "node_probabilities",
]


@dataclass(frozen=True)
class GridSpec:
    n: int
    T: float
    lam: float
    delta: float = field(init=False)
    kappa: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, Integral) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        for name in ("T", "lam"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, Real) or not value > 0 or not math.isfinite(value):
                raise ConfigError(f"{name} must be a positive finite real, got {value!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "delta", self.T / self.n)
        object.__setattr__(self, "kappa", math.exp(-self.lam * self.delta))
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError(f"kappa={self.kappa!r} degenerate; lambda * delta out of range")

    @property
    def sqrt_delta(self) -> float:
        return math.sqrt(self.delta)

    @property
    def eta_var(self) -> float:
        """Variance of one compensated-Poisson increment, kappa * (1 - kappa)."""
        return self.kappa * (1.0 - self.kappa)

    def time(self, j: int) -> float:
        # The last grid time is pinned to T so that (T - t) vanishes exactly at maturity.
        return self.T if j == self.n else j * self.delta

    def stability_lhs(self, p: float, lipschitz: float) -> float:
        c = lipschitz
        return (3 + 2 * p + 2 * c + 2 * c * c * (1 + math.exp(2 * self.lam * self.T) / self.lam)) * self.delta

    def is_stable(self, p: float, lipschitz: float) -> bool:
        """Step-size condition under which the explicit scheme's energy bound is proven."""
        return self.stability_lhs(p, lipschitz) < 1.0


@dataclass(frozen=True)
class Node:
    j: int
    up: int
    jumps: int

    def w(self, g: GridSpec) -> float:
        return g.sqrt_delta * (2 * self.up - self.j)

    def ntilde(self, g: GridSpec) -> float:
        return self.jumps + self.j * (g.kappa - 1.0)

    def t(self, g: GridSpec) -> float:
        return g.time(self.j)


@dataclass(frozen=True)
class Branch:
    e: int
    jump: bool
    prob: float

    def eta(self, kappa: float) -> float:
        return kappa if self.jump else kappa - 1.0

    def mu(self, kappa: float) -> float:
        return self.e * self.eta(kappa)


# Fixed branch order used everywhere: (+1, no jump), (-1, no jump), (+1, jump), (-1, jump).
BRANCHES = ((1, False), (-1, False), (1, True), (-1, True))


def make_grid(n: int, T: float = 1.0, lam: float = 5.0) -> GridSpec:
    return GridSpec(n=n, T=T, lam=lam)


def _branches(g: GridSpec) -> list[Branch]:
    k = g.kappa
    return [Branch(e, jump, (1.0 - k) / 2 if jump else k / 2) for e, jump in BRANCHES]


def successors(g: GridSpec, node: Node) -> list[tuple[Branch, Node]]:
    if not 0 <= node.j < g.n:
        raise ConfigError(f"node {node} has no successors on a grid with n={g.n}")
    out = []
    for b in _branches(g):
        child = Node(node.j + 1, node.up + (1 if b.e == 1 else 0), node.jumps + (1 if b.jump else 0))
        out.append((b, child))
    return out


def increment_moments(g: GridSpec) -> dict[str, float]:
    """First and second moments of (e, eta, mu = e * eta) by exact four-branch summation."""
    k = g.kappa
    acc = dict.fromkeys(("e", "eta", "mu", "e2", "eta2", "mu2", "e_eta", "e_mu", "eta_mu"), 0.0)
    for b in _branches(g):
        e, eta, mu = float(b.e), b.eta(k), b.mu(k)
        for key, val in (
            ("e", e), ("eta", eta), ("mu", mu),
            ("e2", e * e), ("eta2", eta * eta), ("mu2", mu * mu),
            ("e_eta", e * eta), ("e_mu", e * mu), ("eta_mu", eta * mu),
        ):
            acc[key] += b.prob * val
    return acc


def layer_size(j: int) -> int:
    return (j + 1) ** 2


def total_nodes(n: int) -> int:
    return sum(layer_size(j) for j in range(n + 1))


def layer_coordinates(g: GridSpec, j: int, rows: slice | None = None) -> tuple[float, np.ndarray, np.ndarray]:
    """Return ``(t_j, W, Ntilde)`` on layer ``j`` as full 2-D arrays indexed ``[up, jumps]``.

    ``rows`` restricts the ``up`` range, which lets a layer be processed in chunks.
    """
    up = np.arange(j + 1, dtype=float)
    if rows is not None:
        up = up[rows]
    jumps = np.arange(j + 1, dtype=float)
    w = g.sqrt_delta * (2.0 * up - j)
    nt = jumps + j * (g.kappa - 1.0)
    W, NT = np.meshgrid(w, nt, indexing="ij")
    return g.time(j), W, NT


def node_probabilities(g: GridSpec, j: int) -> np.ndarray:
    """P(node) on layer j: product of the independent up-count and jump-count binomial laws."""
    k = np.arange(j + 1)
    return np.outer(binom.pmf(k, j, 0.5), binom.pmf(k, j, 1.0 - g.kappa))
