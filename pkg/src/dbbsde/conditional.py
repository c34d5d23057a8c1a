"""One-step conditional expectation and discrete martingale representation.

A layer-(j+1) quantity seen from a layer-j node takes four values, one per branch, in
the order (+1, no jump), (-1, no jump), (+1, jump), (-1, jump).  With the orthogonal
increments ``e``, ``eta`` and ``mu = e * eta`` every such quantity splits exactly as

    Y = m + sqrt(delta) * z * e + u * eta + v * mu.

All functions here accept floats or equally shaped numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import GridSpec

__all__ = ["StepValues", "ReprCoeffs", "cond_exp", "repr_coeffs", "children"]


@dataclass(frozen=True)
class StepValues:
    vpp: np.ndarray | float  # e=+1, no jump
    vpm: np.ndarray | float  # e=-1, no jump
    vjp: np.ndarray | float  # e=+1, jump
    vjm: np.ndarray | float  # e=-1, jump


@dataclass(frozen=True)
class ReprCoeffs:
    m: np.ndarray | float
    z: np.ndarray | float
    u: np.ndarray | float
    v: np.ndarray | float

    def reconstruct(self, g: GridSpec, e: int, jump: bool):
        eta = g.kappa if jump else g.kappa - 1.0
        return self.m + g.sqrt_delta * self.z * e + self.u * eta + self.v * e * eta


def children(y_next: np.ndarray, rows: slice | None = None) -> StepValues:
    """Views of a layer-(j+1) array at the four children of every layer-j node.

    ``y_next`` is indexed ``[up, jumps]`` with shape ``(j + 2, j + 2)``; ``rows`` selects
    a contiguous range of parent ``up`` indices.
    """
    r = rows if rows is not None else slice(0, y_next.shape[0] - 1)
    hi = slice(r.start + 1, r.stop + 1)
    return StepValues(
        vpp=y_next[hi, :-1],
        vpm=y_next[r, :-1],
        vjp=y_next[hi, 1:],
        vjm=y_next[r, 1:],
    )


def cond_exp(g: GridSpec, sv: StepValues):
    k = g.kappa
    return (k / 2) * sv.vpp + (k / 2) * sv.vpm + ((1 - k) / 2) * sv.vjp + ((1 - k) / 2) * sv.vjm


def repr_coeffs(g: GridSpec, sv: StepValues) -> ReprCoeffs:
    k = g.kappa
    wn, wj = k / 2, (1 - k) / 2
    eta_n, eta_j = k - 1.0, k
    s_n, s_j = sv.vpp + sv.vpm, sv.vjp + sv.vjm
    d_n, d_j = sv.vpp - sv.vpm, sv.vjp - sv.vjm
    m = wn * s_n + wj * s_j
    e_mom = wn * d_n + wj * d_j
    eta_mom = (wn * eta_n) * s_n + (wj * eta_j) * s_j
    mu_mom = (wn * eta_n) * d_n + (wj * eta_j) * d_j
    var = g.eta_var
    return ReprCoeffs(m=m, z=e_mom / g.sqrt_delta, u=eta_mom / var, v=mu_mom / var)
