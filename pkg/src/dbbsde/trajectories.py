"""Sampled lattice paths, cumulative penalty processes and CSV output."""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DBBSDEError
from .model import ProblemSpec
from .solution import SchemeSolution

__all__ = [
    "TRAJECTORY_HEADER",
    "GENERATOR",
    "TrajectorySample",
    "sample_path",
    "sample_paths",
    "write_csv",
    "emit_trajectory",
]

TRAJECTORY_HEADER = ("t", "e", "eta", "w", "ntilde", "y", "xi", "zeta", "a", "k", "A", "K", "alpha")
GENERATOR = f"numpy.random.PCG64 (numpy {np.__version__})"


@dataclass
class TrajectorySample:
    """One lattice path with the solution read along it.

    Row ``j`` holds time ``t_j``; ``e`` and ``eta`` are the increments that led into
    ``t_j`` (zero at ``j = 0``), and ``a``, ``k`` are zero at maturity where the scheme
    defines none.  ``A``, ``K`` are running sums including step ``j``.
    """

    seed: int | str
    t: np.ndarray
    e: np.ndarray
    eta: np.ndarray
    w: np.ndarray
    ntilde: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    a: np.ndarray
    k: np.ndarray
    A: np.ndarray
    K: np.ndarray
    alpha: np.ndarray

    def rows(self) -> Iterable[tuple]:
        cols = [getattr(self, name) for name in TRAJECTORY_HEADER]
        return zip(*cols)

    def max_violation(self) -> float:
        return float(np.max(np.maximum(np.maximum(self.xi - self.y, 0.0), np.maximum(self.y - self.zeta, 0.0))))


def _draw(n: int, kappa: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    e = np.where(rng.random(n) < 0.5, 1, -1)
    jump = rng.random(n) < 1.0 - kappa
    return e, jump


def sample_path(
    prob: ProblemSpec,
    solution: SchemeSolution,
    seed: int | np.random.SeedSequence = 0,
) -> TrajectorySample:
    solution.require_full()
    g = prob.grid
    n, k = g.n, g.kappa
    rng = np.random.default_rng(seed)
    e, jump = _draw(n, k, rng)
    eta = np.where(jump, k, k - 1.0)
    up = np.concatenate([[0], np.cumsum(e > 0)])
    jumps = np.concatenate([[0], np.cumsum(jump)])
    j = np.arange(n + 1)

    def along(name: str, last: float | None = None) -> np.ndarray:
        layers = getattr(solution, name)
        vals = [layers[i][up[i], jumps[i]] for i in range(n if last is not None else n + 1)]
        if last is not None:
            vals.append(last)
        return np.array(vals, dtype=float)

    a = along("a", 0.0)
    kk = along("k", 0.0)
    A, K = np.cumsum(a), np.cumsum(kk)
    label = seed if isinstance(seed, (int, np.integer)) else f"{seed.entropy}:{'/'.join(map(str, seed.spawn_key))}"
    return TrajectorySample(
        seed=label,
        t=np.array([g.time(i) for i in j]),
        e=np.concatenate([[0], e]).astype(float),
        eta=np.concatenate([[0.0], eta]),
        w=g.sqrt_delta * (2.0 * up - j),
        ntilde=jumps + j * (k - 1.0),
        y=along("y"),
        xi=along("xi"),
        zeta=along("zeta"),
        a=a,
        k=kk,
        A=A,
        K=K,
        alpha=A - K,
    )


def sample_paths(prob: ProblemSpec, solution: SchemeSolution, seed: int, count: int) -> list[TrajectorySample]:
    """``count`` independent paths; path i uses child i of ``SeedSequence(seed)``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [sample_path(prob, solution, ss) for ss in children]


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def write_csv(
    path: str | os.PathLike,
    header: Sequence[str],
    rows: Iterable[Sequence],
    metadata: Sequence[str] = (),
) -> Path:
    """Write rows atomically (temporary file in the target directory, then rename)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
                for line in metadata:
                    fh.write(f"# {line}\n")
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([_fmt(x) for x in row])
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise DBBSDEError(f"cannot write {path}: {exc}") from exc
    return path


def emit_trajectory(sample: TrajectorySample, path: str | os.PathLike, prob: ProblemSpec | None = None) -> Path:
    meta = [f"generator={GENERATOR}", f"seed={sample.seed}"]
    if prob is not None:
        g = prob.grid
        meta.append(f"problem={prob.name} n={g.n} T={g.T!r} lambda={g.lam!r} p={prob.p!r}")
    return write_csv(path, TRAJECTORY_HEADER, sample.rows(), meta)
