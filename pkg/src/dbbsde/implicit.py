"""Implicit penalized scheme: ``y_j = Theta^{-1}(E[y_{j+1} | F_j])`` node by node.

    Theta(y) = y - g(t_j, y, z, u)*delta - pd*(y - xi)^- + pd*(zeta - y)^-

is strictly increasing with slope at least ``1 - C_g*delta``, so each node has a unique
root, found by bracket expansion followed by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditional import children, repr_coeffs
from .errors import ConfigError, NumericalError
from .model import ProblemSpec
from .solution import Layer, SchemeSolution, sweep

__all__ = ["RootFindConfig", "theta", "invert_theta", "implicit_step", "solve_implicit"]


@dataclass(frozen=True)
class RootFindConfig:
    abs_tol: float = 1e-13
    max_iter: int = 200
    bracket_pad: float = 1.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ConfigError("abs_tol must be > 0")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if not self.bracket_pad > 0:
            raise ConfigError("bracket_pad must be > 0")


class RootFindError(NumericalError):
    def __init__(self, msg: str, index: np.ndarray):
        super().__init__(msg)
        self.index = index


def theta(prob: ProblemSpec, j: int, y, z, u, xi, zeta):
    g = prob.grid
    pd = prob.p_delta
    return (
        y
        - prob.driver(g.time(j), y, z, u) * g.delta
        - pd * np.maximum(xi - y, 0.0)
        + pd * np.maximum(y - zeta, 0.0)
    )


def invert_theta(
    prob: ProblemSpec,
    j: int,
    z,
    u,
    target,
    xi,
    zeta,
    cfg: RootFindConfig | None = None,
):
    """Solve ``theta(y) = target`` elementwise.

    A node counts as converged once ``|theta(y) - target| <= abs_tol`` or its bracket has
    shrunk to two adjacent floats (then the better endpoint is returned).
    """
    cfg = cfg or RootFindConfig()
    g = prob.grid
    if prob.driver.lipschitz * g.delta >= 1.0:
        raise ConfigError(
            f"C_g * delta = {prob.driver.lipschitz * g.delta:g} >= 1; theta is not guaranteed monotone"
        )
    scalar = np.ndim(target) == 0
    target, z, u, xi, zeta = (np.atleast_1d(np.asarray(x, dtype=float)) for x in np.broadcast_arrays(target, z, u, xi, zeta))
    shape = target.shape
    tgt, z, u, xi, zeta = (x.ravel() for x in (target, z, u, xi, zeta))

    def f(y, idx):
        return theta(prob, j, y, z[idx], u[idx], xi[idx], zeta[idx]) - tgt[idx]

    out = np.empty_like(tgt)
    # target itself is the root whenever g vanishes there and no penalty is active
    f0 = f(tgt, slice(None))
    hit = np.abs(f0) <= cfg.abs_tol
    out[hit] = tgt[hit]

    half = cfg.bracket_pad * (1.0 + np.abs(tgt)) * (1.0 + prob.p_delta)
    lo, hi = tgt - half, tgt + half

    for side, sign in ((lo, 1.0), (hi, -1.0)):
        # lo needs f <= 0, hi needs f >= 0
        idx = np.flatnonzero(sign * f(side, slice(None)) > 0)
        for _ in range(cfg.max_iter):
            if idx.size == 0:
                break
            side[idx] = tgt[idx] - sign * 2.0 * np.abs(tgt[idx] - side[idx])
            idx = idx[sign * f(side[idx], idx) > 0]
        if idx.size:
            raise RootFindError(f"could not bracket the root at {idx.size} node(s)", idx)

    active = np.flatnonzero(~hit)
    for _ in range(cfg.max_iter):
        if active.size == 0:
            break
        a, b = lo[active], hi[active]
        mid = 0.5 * (a + b)
        fm = f(mid, active)
        ok = np.abs(fm) <= cfg.abs_tol
        collapsed = ~ok & ((mid <= a) | (mid >= b))
        if np.any(collapsed):
            ci = active[collapsed]
            fa, fb = np.abs(f(lo[ci], ci)), np.abs(f(hi[ci], ci))
            out[ci] = np.where(fa <= fb, lo[ci], hi[ci])
        out[active[ok]] = mid[ok]
        keep = ~(ok | collapsed)
        active, mid, fm = active[keep], mid[keep], fm[keep]
        neg = fm < 0
        lo[active[neg]] = mid[neg]
        hi[active[~neg]] = mid[~neg]
    if active.size:
        raise RootFindError(f"bisection did not converge in {cfg.max_iter} iterations at {active.size} node(s)", active)
    out = out.reshape(shape)
    return float(out[0]) if scalar else out


def implicit_step(
    prob: ProblemSpec,
    j: int,
    y_next: np.ndarray,
    xi: np.ndarray,
    zeta: np.ndarray,
    rows: slice | None = None,
    cfg: RootFindConfig | None = None,
) -> Layer:
    rows = rows if rows is not None else slice(0, j + 1)
    c = repr_coeffs(prob.grid, children(y_next, rows))
    xr, zr = xi[rows], zeta[rows]
    try:
        y = invert_theta(prob, j, c.z, c.u, c.m, xr, zr, cfg)
    except RootFindError as exc:
        up, jumps = np.unravel_index(int(exc.index[0]), np.shape(c.m))
        raise NumericalError(f"{exc} (first failing node: j={j}, up={rows.start + up}, jumps={jumps})") from exc
    pd = prob.p_delta
    a = pd * np.maximum(xr - y, 0.0)
    k = pd * np.maximum(y - zr, 0.0)
    return Layer(y=y, z=c.z, u=c.u, v=c.v, a=a, k=k)


def solve_implicit(
    prob: ProblemSpec,
    cfg: RootFindConfig | None = None,
    full=False,
    threads: int = 1,
    warn: bool = True,
    observer=None,
) -> SchemeSolution:
    cfg = cfg or RootFindConfig()

    def step(pr, j, y_next, xi, zeta, rows):
        return implicit_step(pr, j, y_next, xi, zeta, rows, cfg)

    return sweep(prob, "implicit", step, full=full, threads=threads, warn=warn, observer=observer)
