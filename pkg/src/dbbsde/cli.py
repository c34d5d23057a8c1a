"""Command-line front end.

    dbbsde solve   --example 1 --n 100 --p 20
    dbbsde table   --example 2 --a -1 --n_list 100,200 --p_list 20,20000 --out t2.csv
    dbbsde paths   --example 1 --n 200 --p 20000 --count 3 --out figs/
    dbbsde compare --example 1 --p 100 --n_list 50,100,200
    dbbsde check   --example 1 --n 100 --p 100

Settings come from an optional ``--config`` file of ``key = value`` lines (``#`` starts
a comment) and are overridden by ``--key value`` flags.  Exit codes: 0 success,
2 configuration error, 3 numerical failure, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DBBSDEError, InvariantViolation, ModelError, NumericalError, StabilityWarning
from .experiments import TABLE_N, TABLE_P, SweepSpec, build_problem, run_audit, run_comparison, run_table, solve
from .lattice import make_grid
from .model import unconstrained
from .oracle import MAX_ORACLE_N, oracle_solve
from .trajectories import emit_trajectory, sample_paths, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4


def _bool(s: str) -> bool:
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _ints(s: str) -> tuple:
    return tuple(int(x) for x in str(s).split(",") if x.strip())


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in str(s).split(",") if x.strip())


@dataclass(frozen=True)
class Config:
    T: float = 1.0
    n: int = 100
    lambda_: float = 5.0
    p: float = 20.0
    example: str = "1"
    a: float | None = None
    scheme: str = "explicit"
    seed: int = 0
    out: str | None = None
    compat_literal_penalty: bool = False
    # command-specific
    n_list: tuple | None = None
    p_list: tuple | None = None
    count: int = 1
    threads: int = 1
    jobs: int = 1

    def validate(self) -> "Config":
        if self.example not in ("1", "2", "unconstrained"):
            raise ConfigError(f"example must be 1, 2 or unconstrained, got {self.example!r}")
        if (self.example == "2") != (self.a is not None):
            raise ConfigError("a is required for example 2 and only allowed there")
        if self.scheme not in ("explicit", "implicit"):
            raise ConfigError(f"scheme must be explicit or implicit, got {self.scheme!r}")
        if self.compat_literal_penalty and self.scheme != "explicit":
            raise ConfigError("compat_literal_penalty applies to the explicit scheme only")
        if self.n < 1 or not self.T > 0 or not self.lambda_ > 0 or not self.p >= 0:
            raise ConfigError("need n >= 1, T > 0, lambda > 0, p >= 0")
        if self.count < 1 or self.threads < 1 or self.jobs < 1:
            raise ConfigError("count, threads and jobs must be >= 1")
        return self

    def sweep(self, n_list=None, p_list=None) -> SweepSpec:
        return SweepSpec(
            example=self.example,
            a=self.a,
            n_list=n_list if n_list is not None else (self.n_list if self.n_list is not None else (self.n,)),
            p_list=p_list if p_list is not None else (self.p_list if self.p_list is not None else (self.p,)),
            scheme=self.scheme,
            T=self.T,
            lam=self.lambda_,
            literal_penalty=self.compat_literal_penalty,
        )


_PARSERS = {
    "T": float,
    "n": int,
    "lambda": float,
    "p": float,
    "example": str,
    "a": float,
    "scheme": str,
    "seed": int,
    "out": str,
    "compat_literal_penalty": _bool,
    "n_list": _ints,
    "p_list": _floats,
    "count": int,
    "threads": int,
    "jobs": int,
}
_FIELD = {k: ("lambda_" if k == "lambda" else k) for k in _PARSERS}


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def build_config(file_values: dict, flag_values: dict) -> Config:
    merged = {**file_values, **{k: v for k, v in flag_values.items() if v is not None}}
    unknown = sorted(set(merged) - set(_PARSERS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    kwargs = {}
    for key, raw in merged.items():
        try:
            kwargs[_FIELD[key]] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return Config(**kwargs).validate()


def _problem(cfg: Config, n: int | None = None, p: float | None = None, T: float | None = None):
    grid = make_grid(cfg.n if n is None else n, cfg.T if T is None else T, cfg.lambda_)
    return build_problem(cfg.example, grid, cfg.p if p is None else p, cfg.a)


def _stability_note(prob) -> str | None:
    if prob.is_stable():
        return None
    g = prob.grid
    return (
        f"warning: stability condition fails ({g.stability_lhs(prob.p, prob.driver.lipschitz):.4g} >= 1); "
        "results are reported anyway"
    )


def cmd_solve(cfg: Config) -> int:
    prob = _problem(cfg)
    store = cfg.out is not None
    sol = solve(prob, cfg.scheme, cfg.compat_literal_penalty, full=store, threads=cfg.threads, warn=False)
    y0 = sol.y0
    print(f"{y0:.4f}")
    print(f"# problem={prob.name} scheme={cfg.scheme} n={cfg.n} T={cfg.T!r} lambda={cfg.lambda_!r} p={cfg.p!r}")
    print(f"# y0={y0!r} z0={float(sol.z[0][0, 0])!r} u0={float(sol.u[0][0, 0])!r}")
    note = _stability_note(prob)
    if note:
        print(f"# {note}")
    if store:
        g = prob.grid

        def rows():
            for j in range(g.n + 1):
                for up in range(j + 1):
                    for jumps in range(j + 1):
                        rest = (
                            [getattr(sol, f)[j][up, jumps] for f in ("z", "u", "v", "a", "k")] if j < g.n else [""] * 5
                        )
                        yield [
                            j, up, jumps, g.time(j), g.sqrt_delta * (2 * up - j), jumps + j * (g.kappa - 1.0),
                            sol.xi[j][up, jumps], sol.zeta[j][up, jumps], sol.y[j][up, jumps], *rest,
                        ]

        header = ("j", "up", "jumps", "t", "w", "ntilde", "xi", "zeta", "y", "z", "u", "v", "a", "k")
        write_csv(cfg.out, header, rows(), [f"problem={prob.name} scheme={cfg.scheme} n={g.n} p={prob.p!r}"])
        bad = [j for j in range(g.n) if np.any(sol.a[j] * sol.k[j] != 0)]
        if bad:
            raise InvariantViolation(f"a*k != 0 on layer {bad[0]}")
    return EXIT_OK


def cmd_table(cfg: Config) -> int:
    spec = cfg.sweep(
        n_list=cfg.n_list if cfg.n_list is not None else TABLE_N,
        p_list=cfg.p_list if cfg.p_list is not None else TABLE_P,
    )
    res = run_table(spec, jobs=cfg.jobs, threads=cfg.threads)
    if cfg.out:
        res.write(cfg.out)
    print(",".join(res.header()))
    for row in res.rows():
        print(",".join([f"{row[0]:g}"] + [f"{v:.4f}" for v in row[1:]]))
    for msg in res.failures:
        print(f"# failed: {msg}", file=sys.stderr)
    return EXIT_NUMERIC if res.failures else EXIT_OK


def cmd_paths(cfg: Config) -> int:
    prob = _problem(cfg)
    sol = solve(prob, cfg.scheme, cfg.compat_literal_penalty, full=True, threads=cfg.threads, warn=False)
    out = Path(cfg.out or ".")
    for i, sample in enumerate(sample_paths(prob, sol, cfg.seed, cfg.count)):
        path = emit_trajectory(sample, out / f"path_{i:03d}.csv", prob)
        print(f"{path}: max barrier violation {sample.max_violation():.3e}")
        if np.any(sample.a * sample.k != 0) or np.any(np.diff(sample.A) < 0) or np.any(np.diff(sample.K) < 0):
            raise InvariantViolation(f"path {i}: cumulative processes not monotone or a*k != 0")
    return EXIT_OK


def cmd_compare(cfg: Config) -> int:
    spec = cfg.sweep(n_list=cfg.n_list if cfg.n_list is not None else (50, 100, 200))
    rep = run_comparison(spec, cfg.p, threads=cfg.threads)
    if cfg.out:
        rep.write(cfg.out)
    print(",".join(rep.header))
    for r in rep.rows:
        print(f"{r[0]},{r[1]:.6g},{r[2]:.10f},{r[3]:.10f},{r[4]:.3e},{r[5]:.3e}")
    print(f"# fitted order {rep.slope:.3f}; ratios {', '.join(f'{x:.3f}' for x in rep.ratios())}")
    return EXIT_OK


def cmd_check(cfg: Config) -> int:
    failed = []

    def report(name: str, ok: bool, detail: str) -> None:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        if not ok:
            failed.append(name)

    n_o = min(cfg.n, 6, MAX_ORACLE_N)
    for scheme in ("explicit", "implicit"):
        prob = _problem(cfg, n=n_o)
        if scheme == "implicit" and prob.driver.lipschitz * prob.grid.delta >= 1:
            print(f"[SKIP] oracle {scheme} n={n_o}: C_g*delta >= 1 at T={cfg.T:g}")
            continue
        lat = solve(prob, scheme, warn=False).y0
        ora = oracle_solve(prob, scheme).root
        report(f"oracle {scheme} n={n_o}", abs(lat - ora) <= 1e-12, f"|lattice-oracle|={abs(lat - ora):.2e}")

    g0 = make_grid(n_o, cfg.T, cfg.lambda_)
    zero = unconstrained(g0, lambda t, w, nt: w * w + nt, p=0.0)
    ye = solve(zero, "explicit", full=("y",), warn=False)
    yi = solve(zero, "implicit", full=("y",), warn=False)
    same = all(np.array_equal(a, b) for a, b in zip(ye.y, yi.y))
    report("p=0, g=0: explicit == implicit", same, "bitwise" if same else "differ")

    prob = _problem(cfg)
    note = _stability_note(prob)
    if note:
        print(f"[WARN] {note}")
    audit = run_audit(cfg.sweep(n_list=(cfg.n,), p_list=(cfg.p,)), threads=cfg.threads)
    for r in audit.results:
        report(r.name, r.passed, f"worst={r.worst:.3e}" + (f" at {r.where}" if r.where else ""))
    if cfg.out:
        audit.write(cfg.out)
    if failed:
        raise InvariantViolation(f"{len(failed)} check(s) failed")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "table": cmd_table, "paths": cmd_paths, "compare": cmd_compare, "check": cmd_check}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dbbsde", description="Penalized lattice schemes for doubly reflected BSDEs with jumps")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="file of 'key = value' lines")
    for key in _PARSERS:
        parser.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        file_values = parse_config_text(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
        cfg = build_config(file_values, {k: getattr(args, k) for k in _PARSERS})
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StabilityWarning)
            return COMMANDS[args.command](cfg)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvariantViolation, ModelError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except DBBSDEError as exc:
        # output could not be written
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
