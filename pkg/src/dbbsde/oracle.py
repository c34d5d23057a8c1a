"""Non-recombining path tree over all 4**n increment paths.

Ground truth for the lattice solvers at small n: every path node carries its own
values and conditional expectations are plain weighted sums over its four children,
with weights taken from cumulative path probabilities.  Depth-j nodes are stored in
flat arrays indexed by the base-4 path code ``sum(b_i * 4**(j - i))`` where ``b_i`` is
the branch taken at step i, in the order (+1, no jump), (-1, no jump), (+1, jump),
(-1, jump).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .conditional import StepValues, cond_exp
from .errors import ConfigError, ModelError, NumericalError
from .implicit import RootFindConfig, RootFindError, invert_theta
from .lattice import GridSpec
from .model import ProblemSpec

__all__ = ["MAX_ORACLE_N", "PathTree", "OracleResult", "oracle_solve", "oracle_cond_exp_check", "leaf_mass"]

MAX_ORACLE_N = 12

_E = np.array([1.0, -1.0, 1.0, -1.0])
_JUMP = np.array([False, False, True, True])


def _check_depth(n: int) -> None:
    if n > MAX_ORACLE_N:
        raise ConfigError(f"path tree limited to n <= {MAX_ORACLE_N} (4**n leaves), got n={n}")


@dataclass
class PathTree:
    """Increment paths up to a fixed depth; all per-depth arrays are indexed by path code."""

    grid: GridSpec
    depth: int
    prob: list = field(default_factory=list)
    w: list = field(default_factory=list)
    nt: list = field(default_factory=list)

    @classmethod
    def build(cls, g: GridSpec, depth: int | None = None) -> "PathTree":
        depth = g.n if depth is None else depth
        _check_depth(depth)
        k = g.kappa
        bprob = np.where(_JUMP, (1 - k) / 2, k / 2)
        beta = np.where(_JUMP, k, k - 1.0)
        tree = cls(g, depth)
        tree.prob.append(np.ones(1))
        tree.w.append(np.zeros(1))
        tree.nt.append(np.zeros(1))
        walk = np.zeros(1)
        for _ in range(depth):
            tree.prob.append((tree.prob[-1][:, None] * bprob[None, :]).ravel())
            walk = (walk[:, None] + _E[None, :]).ravel()
            # integer walk keeps W exactly zero where paths return, so ties like W >= 0 resolve as on the lattice
            tree.w.append(g.sqrt_delta * walk)
            tree.nt.append((tree.nt[-1][:, None] + beta[None, :]).ravel())
        return tree

    def digits(self, j: int) -> np.ndarray:
        """Branch index taken at each of the first j steps, shape ``(4**j, j)``."""
        codes = np.arange(4**j)
        powers = 4 ** np.arange(j - 1, -1, -1)
        return (codes[:, None] // powers[None, :]) % 4

    def increments(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-path ``(e_1..e_j, eta_1..eta_j)`` at depth j."""
        d = self.digits(j)
        k = self.grid.kappa
        return _E[d], np.where(_JUMP[d], k, k - 1.0)

    def histories(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """``W`` and ``Ntilde`` at times ``t_0..t_j`` along each depth-j path."""
        e, eta = self.increments(j)
        zero = np.zeros((4**j, 1))
        w = self.grid.sqrt_delta * np.concatenate([zero, np.cumsum(e, axis=1)], axis=1)
        nt = np.concatenate([zero, np.cumsum(eta, axis=1)], axis=1)
        return w, nt

    def lattice_coords(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Recombined ``(up, jumps)`` of every depth-j path."""
        d = self.digits(j)
        return (_E[d] > 0).sum(axis=1), _JUMP[d].sum(axis=1)


@dataclass
class OracleResult:
    tree: PathTree
    scheme: str
    y: list
    z: list
    u: list
    v: list
    a: list
    k: list

    @property
    def root(self) -> float:
        return float(self.y[0][0])


def _barriers(prob: ProblemSpec, tree: PathTree, j: int) -> tuple[np.ndarray, np.ndarray]:
    t = prob.grid.time(j)
    if prob.markovian:
        return prob.barriers.evaluate(t, tree.w[j], tree.nt[j])
    w_hist, nt_hist = tree.histories(j)
    return prob.barriers.evaluate(t, w_hist, nt_hist)


def oracle_solve(prob: ProblemSpec, scheme: str = "explicit", cfg: RootFindConfig | None = None) -> OracleResult:
    if scheme not in ("explicit", "implicit"):
        raise ConfigError(f"unknown scheme {scheme!r}")
    g = prob.grid
    n = g.n
    _check_depth(n)
    tree = PathTree.build(g)
    k = g.kappa
    bprob = np.where(_JUMP, (1 - k) / 2, k / 2)
    beta = np.where(_JUMP, k, k - 1.0)
    var_eta = float(np.sum(bprob * beta**2))
    var_mu = float(np.sum(bprob * (_E * beta) ** 2))
    res = OracleResult(tree, scheme, *([None] * (n + 1) for _ in range(6)))

    xi, zeta = _barriers(prob, tree, n)
    if np.any(xi != zeta):
        raise ModelError("barriers differ at maturity")
    res.y[n] = np.array(xi, dtype=float)
    pd = prob.p_delta
    for j in range(n - 1, -1, -1):
        xi, zeta = _barriers(prob, tree, j)
        if np.any(xi > zeta):
            raise ModelError(f"lower barrier above upper barrier at depth {j}")
        kids = res.y[j + 1].reshape(-1, 4)
        # conditional weights from cumulative path probabilities
        wts = tree.prob[j + 1].reshape(-1, 4) / tree.prob[j][:, None]
        m = np.sum(kids * wts, axis=1)
        z = np.sum(kids * wts * _E, axis=1) / g.sqrt_delta
        u = np.sum(kids * wts * beta, axis=1) / var_eta
        v = np.sum(kids * wts * _E * beta, axis=1) / var_mu
        t = g.time(j)
        if scheme == "explicit":
            base = m + prob.driver(t, m, z, u) * g.delta
            y = base + pd * np.maximum(xi - base, 0.0) / (1 + pd) - pd * np.maximum(base - zeta, 0.0) / (1 + pd)
        else:
            try:
                y = invert_theta(prob, j, z, u, m, xi, zeta, cfg)
            except RootFindError as exc:
                raise NumericalError(f"{exc} at depth {j}, path code {int(exc.index[0])}") from exc
        res.y[j] = y
        res.z[j], res.u[j], res.v[j] = z, u, v
        res.a[j] = pd * np.maximum(xi - y, 0.0)
        res.k[j] = pd * np.maximum(y - zeta, 0.0)
    return res


def oracle_cond_exp_check(
    g: GridSpec,
    j: int,
    functional: Callable[[np.ndarray, np.ndarray], np.ndarray],
) -> float:
    """Max gap between the four-branch kernel and direct child enumeration at depth j.

    ``functional(e, eta)`` receives increment histories of shape ``(4**(j+1), j+1)`` and
    returns one value per depth-(j+1) path.
    """
    if not 0 <= j < g.n:
        raise ConfigError(f"depth {j} must lie in [0, n)")
    _check_depth(g.n)
    tree = PathTree.build(g, j + 1)
    e, eta = tree.increments(j + 1)
    vals = np.asarray(functional(e, eta), dtype=float).reshape(-1, 4)
    kernel = cond_exp(g, StepValues(vals[:, 0], vals[:, 1], vals[:, 2], vals[:, 3]))
    direct = np.sum(vals * tree.prob[j + 1].reshape(-1, 4), axis=1) / tree.prob[j]
    return float(np.max(np.abs(kernel - direct)))


def leaf_mass(tree: PathTree) -> float:
    return float(math.fsum(tree.prob[tree.depth]))
