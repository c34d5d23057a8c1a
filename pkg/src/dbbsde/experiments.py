"""Parameter sweeps, explicit/implicit comparisons and invariant audits.

Every expectation over the lattice uses exact forward node probabilities, so audit
results are deterministic.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError
from .explicit import solve_explicit
from .implicit import RootFindConfig, solve_implicit
from .lattice import make_grid, node_probabilities
from .model import ProblemSpec, example1, example2, unconstrained
from .trajectories import write_csv

__all__ = [
    "TABLE_N",
    "TABLE_P",
    "SweepSpec",
    "TableResult",
    "ComparisonReport",
    "InvariantResult",
    "AuditReport",
    "build_problem",
    "solve",
    "run_table",
    "run_comparison",
    "run_audit",
    "energy",
    "max_violation",
]

TABLE_N = (100, 200, 400, 500, 600)
TABLE_P = (20, 50, 100, 500, 1000, 5000, 20000)


@dataclass(frozen=True)
class SweepSpec:
    example: str = "1"
    a: float | None = None
    n_list: tuple = TABLE_N
    p_list: tuple = TABLE_P
    scheme: str = "explicit"
    T: float = 1.0
    lam: float = 5.0
    literal_penalty: bool = False

    def __post_init__(self):
        object.__setattr__(self, "example", str(self.example))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "p_list", tuple(float(p) for p in self.p_list))
        if self.example not in ("1", "2", "unconstrained"):
            raise ConfigError(f"unknown example {self.example!r}")
        if self.example == "2" and self.a is None:
            raise ConfigError("example 2 needs the threshold a")
        if self.scheme not in ("explicit", "implicit"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.literal_penalty and self.scheme != "explicit":
            raise ConfigError("the literal penalty variant exists for the explicit scheme only")

    def problem(self, n: int, p: float) -> ProblemSpec:
        return build_problem(self.example, make_grid(n, self.T, self.lam), p, self.a)


def build_problem(example: str, grid, p: float, a: float | None = None) -> ProblemSpec:
    example = str(example)
    if example == "1":
        return example1(grid, p)
    if example == "2":
        if a is None:
            raise ConfigError("example 2 needs the threshold a")
        return example2(grid, a, p)
    if example == "unconstrained":
        return unconstrained(grid, lambda t, w, nt: 0.0 * w, p=p)
    raise ConfigError(f"unknown example {example!r}")


def solve(prob: ProblemSpec, scheme: str = "explicit", literal_penalty: bool = False, **kw):
    if scheme == "explicit":
        return solve_explicit(prob, literal_penalty=literal_penalty, **kw)
    if scheme == "implicit":
        return solve_implicit(prob, kw.pop("cfg", None), **kw)
    raise ConfigError(f"unknown scheme {scheme!r}")


# --- tables -----------------------------------------------------------------------------


@dataclass
class TableResult:
    spec: SweepSpec
    values: np.ndarray  # shape (len(p_list), len(n_list)); NaN where the solve failed
    cpu_seconds: np.ndarray
    failures: list = field(default_factory=list)

    def value(self, n: int, p: float) -> float:
        return float(self.values[self.spec.p_list.index(float(p)), self.spec.n_list.index(int(n))])

    def header(self) -> list[str]:
        return ["p"] + [f"n={n}" for n in self.spec.n_list]

    def rows(self) -> list[list]:
        return [[p] + list(self.values[i]) for i, p in enumerate(self.spec.p_list)]

    def write(self, path) -> Path:
        s = self.spec
        meta = [f"example={s.example} a={s.a!r} scheme={s.scheme} T={s.T!r} lambda={s.lam!r} literal_penalty={s.literal_penalty}"]
        return write_csv(path, self.header(), self.rows(), meta)


def _cell(spec: SweepSpec, n: int, p: float, threads: int) -> tuple[float, float, str | None]:
    start = time.process_time()
    try:
        sol = solve(spec.problem(n, p), spec.scheme, spec.literal_penalty, threads=threads, warn=False)
        val, err = sol.y0, None
    except NumericalError as exc:
        val, err = math.nan, f"n={n} p={p:g}: {exc}"
    return val, time.process_time() - start, err


def run_table(spec: SweepSpec, jobs: int = 1, threads: int = 1) -> TableResult:
    """One solve per (n, p) cell; cells may run concurrently (``jobs``)."""
    cells = [(n, p) for p in spec.p_list for n in spec.n_list]
    if jobs > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(lambda c: _cell(spec, c[0], c[1], threads), cells))
    else:
        out = [_cell(spec, n, p, threads) for n, p in cells]
    shape = (len(spec.p_list), len(spec.n_list))
    values = np.array([o[0] for o in out], dtype=float).reshape(shape)
    cpu = np.array([o[1] for o in out], dtype=float).reshape(shape)
    return TableResult(spec, values, cpu, [o[2] for o in out if o[2]])


# --- lattice expectations -----------------------------------------------------------------


def energy(sol) -> float:
    """sup_j E[y_j^2] + delta * sum_j E[z_j^2] + kappa(1-kappa) * sum_j E[u_j^2]."""
    sol.require_full()
    g = sol.problem.grid
    sup_y, sz, su = 0.0, 0.0, 0.0
    for j in range(g.n + 1):
        w = node_probabilities(g, j)
        sup_y = max(sup_y, float(np.sum(w * sol.y[j] ** 2)))
        if j < g.n:
            sz += float(np.sum(w * sol.z[j] ** 2))
            su += float(np.sum(w * sol.u[j] ** 2))
    return sup_y + g.delta * sz + g.eta_var * su


class _EnergyObserver:
    def __init__(self, grid):
        self.grid = grid
        self.sup_y = 0.0
        self.sz = 0.0
        self.su = 0.0

    def terminal(self, y_n: np.ndarray) -> None:
        self.sup_y = max(self.sup_y, float(np.sum(node_probabilities(self.grid, self.grid.n) * y_n**2)))

    def __call__(self, j, layer, xi, zeta) -> None:
        w = node_probabilities(self.grid, j)
        self.sup_y = max(self.sup_y, float(np.sum(w * layer.y**2)))
        self.sz += float(np.sum(w * layer.z**2))
        self.su += float(np.sum(w * layer.u**2))

    @property
    def value(self) -> float:
        g = self.grid
        return self.sup_y + g.delta * self.sz + g.eta_var * self.su


def max_violation(sol) -> float:
    """max over stored nodes of max((xi - y)^+, (y - zeta)^+)."""
    sol.require_full()
    worst = 0.0
    for y, xi, zeta in zip(sol.y, sol.xi, sol.zeta):
        worst = max(worst, float(np.max(np.maximum(xi - y, 0.0))), float(np.max(np.maximum(y - zeta, 0.0))))
    return worst


# --- explicit vs implicit -----------------------------------------------------------------


@dataclass
class ComparisonReport:
    spec: SweepSpec
    p: float
    rows: list  # (n, delta, y0_explicit, y0_implicit, root_gap, sup_ms_gap)
    slope: float

    header = ("n", "delta", "y0_explicit", "y0_implicit", "root_gap", "sup_ms_gap")

    @property
    def gaps(self) -> list[float]:
        return [r[4] for r in self.rows]

    def ratios(self) -> list[float]:
        g = self.gaps
        return [g[i + 1] / g[i] if g[i] > 0 else math.nan for i in range(len(g) - 1)]

    def write(self, path) -> Path:
        s = self.spec
        meta = [
            f"example={s.example} a={s.a!r} p={self.p!r} T={s.T!r} lambda={s.lam!r}",
            f"fitted_order={self.slope!r}",
        ]
        return write_csv(path, self.header, self.rows, meta)


def _fit_order(deltas, gaps) -> float:
    pts = [(math.log(d), math.log(gp)) for d, gp in zip(deltas, gaps) if gp > 0]
    if len(pts) < 2:
        return math.nan
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def run_comparison(spec: SweepSpec, p: float | None = None, cfg: RootFindConfig | None = None, threads: int = 1) -> ComparisonReport:
    """Root gap and sup_j E|ybar_j - y_j|^2 between the schemes for each n in ``spec.n_list``."""
    p = float(spec.p_list[0] if p is None else p)
    rows = []
    for n in spec.n_list:
        prob = spec.problem(n, p)
        ex = solve_explicit(prob, full=("y",), threads=threads, warn=False)
        im = solve_implicit(prob, cfg, full=("y",), threads=threads, warn=False)
        g = prob.grid
        ms = max(float(np.sum(node_probabilities(g, j) * (ex.y[j] - im.y[j]) ** 2)) for j in range(n + 1))
        rows.append((n, g.delta, ex.y0, im.y0, abs(ex.y0 - im.y0), ms))
    slope = _fit_order([r[1] for r in rows], [r[4] for r in rows])
    return ComparisonReport(spec, p, rows, slope)


# --- audits ------------------------------------------------------------------------------


@dataclass
class InvariantResult:
    name: str
    passed: bool
    worst: float
    where: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        loc = f" at {self.where}" if self.where else ""
        return f"[{status}] {self.name}: worst={self.worst:.3e}{loc}"


@dataclass
class AuditReport:
    spec: SweepSpec
    results: list = field(default_factory=list)
    violation_curve: dict = field(default_factory=dict)  # n -> [(p, max violation)]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    header = ("invariant", "passed", "worst", "where")

    def write(self, path) -> Path:
        rows = [(r.name, str(r.passed).lower(), r.worst, r.where) for r in self.results]
        return write_csv(path, self.header, rows, [f"example={self.spec.example} scheme={self.spec.scheme}"])


class _Tracker:
    """Running worst case with node coordinates."""

    def __init__(self):
        self.worst = 0.0
        self.where = ""

    def update(self, j: int, values: np.ndarray, row0: int = 0) -> None:
        if values.size == 0:
            return
        idx = np.unravel_index(int(np.argmax(values)), values.shape)
        v = float(values[idx])
        if v > self.worst:
            self.worst = v
            self.where = f"j={j} up={row0 + idx[0]} jumps={idx[1]}"


class _AuditObserver:
    def __init__(self, prob: ProblemSpec, scheme: str, fp_tol: float):
        self.pd = prob.p_delta
        self.scheme = scheme
        self.fp_tol = fp_tol
        self.comp = _Tracker()
        self.fp_a = _Tracker()
        self.fp_k = _Tracker()
        self.viol = _Tracker()
        self.neg = _Tracker()
        self.any_penalty = 0.0

    def __call__(self, j, layer, xi, zeta) -> None:
        y, a, k = layer.y, layer.a, layer.k
        self.comp.update(j, np.abs(a * k))
        self.neg.update(j, np.maximum(-np.minimum(a, k), 0.0))
        pd = self.pd
        # relative to the magnitude of the terms entering the identity
        scale_a = 1.0 + np.abs(a) + pd * (np.abs(y) + np.abs(xi))
        scale_k = 1.0 + np.abs(k) + pd * (np.abs(y) + np.abs(zeta))
        self.fp_a.update(j, np.abs(a - pd * np.maximum(xi - y, 0.0)) / scale_a)
        self.fp_k.update(j, np.abs(k - pd * np.maximum(y - zeta, 0.0)) / scale_k)
        self.viol.update(j, np.maximum(np.maximum(xi - y, 0.0), np.maximum(y - zeta, 0.0)))
        self.any_penalty = max(self.any_penalty, float(np.max(a + k)))


def run_audit(spec: SweepSpec, fp_tol: float = 1e-12, energy_tol: float = 0.5, threads: int = 1) -> AuditReport:
    """Check complementarity, fixed-point identities, the energy diagnostic and the
    monotone decrease of barrier violation in p for every cell of the sweep."""
    report = AuditReport(spec)
    for n in spec.n_list:
        curve = []
        for p in spec.p_list:
            prob = spec.problem(n, p)
            obs = _AuditObserver(prob, spec.scheme, fp_tol)
            en = _EnergyObserver(prob.grid)

            def both(j, layer, xi, zeta, obs=obs, en=en):
                obs(j, layer, xi, zeta)
                en(j, layer, xi, zeta)

            sol = solve(prob, spec.scheme, spec.literal_penalty, threads=threads, warn=False, observer=both)
            en.terminal(sol.y[n])
            tag = f"n={n} p={p:g}"
            report.results += [
                InvariantResult(f"complementarity a*k=0 ({tag})", obs.comp.worst == 0.0, obs.comp.worst, obs.comp.where),
                InvariantResult(f"a,k >= 0 ({tag})", obs.neg.worst == 0.0, obs.neg.worst, obs.neg.where),
                InvariantResult(f"fixed point a=pd(y-xi)^- ({tag})", obs.fp_a.worst <= fp_tol, obs.fp_a.worst, obs.fp_a.where),
                InvariantResult(f"fixed point k=pd(zeta-y)^- ({tag})", obs.fp_k.worst <= fp_tol, obs.fp_k.worst, obs.fp_k.where),
            ]
            if spec.example == "unconstrained":
                report.results.append(
                    InvariantResult(f"penalty inactive ({tag})", obs.any_penalty == 0.0, obs.any_penalty)
                )
            e1 = en.value
            prob2 = spec.problem(2 * n, p)
            en2 = _EnergyObserver(prob2.grid)
            sol2 = solve(prob2, spec.scheme, spec.literal_penalty, threads=threads, warn=False, observer=en2)
            en2.terminal(sol2.y[2 * n])
            e2 = en2.value
            rel = abs(e2 - e1) / e1 if e1 > 0 else (0.0 if e2 == 0 else math.inf)
            report.results.append(
                InvariantResult(
                    f"energy bound stable n->{2 * n} ({tag})",
                    math.isfinite(e1) and math.isfinite(e2) and rel < energy_tol,
                    rel,
                    f"E(n)={e1:.6g} E(2n)={e2:.6g}",
                )
            )
            curve.append((p, obs.viol.worst, obs.viol.where))
        report.violation_curve[n] = [(p, v) for p, v, _ in curve]
        worst_rise, where = 0.0, ""
        for (p0, v0, _), (p1, v1, w1) in zip(curve, curve[1:]):
            if v1 - v0 > worst_rise:
                worst_rise, where = v1 - v0, f"p={p0:g}->{p1:g} ({w1})"
        report.results.append(
            InvariantResult(f"barrier violation non-increasing in p (n={n})", worst_rise == 0.0, worst_rise, where)
        )
    return report
