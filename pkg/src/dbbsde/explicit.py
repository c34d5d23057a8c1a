"""Explicit penalized scheme.

Per node, with ``m = E[y_{j+1} | F_j]`` and ``G = g(t_j, m, z, u)``::

    a = pd/(1+pd) * (m + G*delta - xi)^-
    k = pd/(1+pd) * (zeta - m - G*delta)^-
    y = m + G*delta + a - k

where ``pd = p * delta`` and ``x^- = max(-x, 0)``.  These are the closed-form solution of
``y = m + G*delta + pd*(y - xi)^- - pd*(zeta - y)^-``.
"""

from __future__ import annotations

import numpy as np

from .conditional import children, repr_coeffs
from .model import ProblemSpec
from .solution import Layer, SchemeSolution, sweep

__all__ = ["explicit_step", "solve_explicit"]


def explicit_step(
    prob: ProblemSpec,
    j: int,
    y_next: np.ndarray,
    xi: np.ndarray,
    zeta: np.ndarray,
    rows: slice | None = None,
    literal_penalty: bool = False,
) -> Layer:
    """Layer-j values from layer j+1.

    ``xi`` and ``zeta`` are the full layer-j barrier arrays; ``rows`` picks the ``up``
    range to compute.  ``literal_penalty`` drops the factor delta on the driver inside
    the penalty terms (diagnostic mode, not a consistent scheme).
    """
    g = prob.grid
    rows = rows if rows is not None else slice(0, j + 1)
    c = repr_coeffs(g, children(y_next, rows))
    drift = prob.driver(g.time(j), c.m, c.z, c.u)
    base = c.m + drift * g.delta
    probe = c.m + drift if literal_penalty else base
    pd = prob.p_delta
    w = pd / (1.0 + pd)
    a = w * np.maximum(xi[rows] - probe, 0.0)
    k = w * np.maximum(probe - zeta[rows], 0.0)
    y = base + a - k
    return Layer(y=y, z=c.z, u=c.u, v=c.v, a=a, k=k)


def solve_explicit(
    prob: ProblemSpec,
    full=False,
    threads: int = 1,
    literal_penalty: bool = False,
    warn: bool = True,
    observer=None,
) -> SchemeSolution:
    def step(pr, j, y_next, xi, zeta, rows):
        return explicit_step(pr, j, y_next, xi, zeta, rows, literal_penalty)

    return sweep(prob, "explicit", step, full=full, threads=threads, warn=warn, observer=observer)
