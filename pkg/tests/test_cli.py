import subprocess
import sys

import pytest

from dbbsde.cli import build_config, main, parse_config_text
from dbbsde.errors import ConfigError, NumericalError
from dbbsde.explicit import solve_explicit
from dbbsde.lattice import make_grid
from dbbsde.model import example1


def test_solve_prints_root_first(capsys):
    assert main(["solve", "--example", "1", "--n", "100", "--p", "20"]) == 0
    out = capsys.readouterr().out.splitlines()
    ref = solve_explicit(example1(make_grid(100, 1.0, 5.0), 20.0), warn=False).y0
    assert out[0] == f"{ref:.4f}"
    assert out[1].startswith("# problem=example1")
    assert any("stability condition fails" in line for line in out)


def test_unconstrained_prints_zero(capsys):
    assert main(["solve", "--example", "unconstrained", "--n", "50"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "0.0000"


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# example 2 run\nexample = 2\na = -1   # threshold\nn = 40\np = 500\n")
    assert main(["solve", "--config", str(cfg)]) == 0
    first = capsys.readouterr().out.splitlines()[0]
    assert main(["solve", "--config", str(cfg), "--a", "1"]) == 0
    assert capsys.readouterr().out.splitlines()[0] != first


def test_parse_config_text():
    assert parse_config_text("n = 5\n\n# c\nlambda=2.5 # rate\n") == {"n": "5", "lambda": "2.5"}
    with pytest.raises(ConfigError):
        parse_config_text("n 5")


@pytest.mark.parametrize(
    "values",
    [
        {"bogus": "1"},
        {"example": "2"},
        {"example": "1", "a": "0"},
        {"n": "ten"},
        {"p": "-1"},
        {"scheme": "implicit", "compat_literal_penalty": "yes"},
        {"compat_literal_penalty": "maybe"},
    ],
)
def test_bad_config_rejected(values):
    with pytest.raises(ConfigError):
        build_config(values, {})


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--n", "0"],
        ["solve", "--bogus", "1"],
        ["frobnicate"],
        ["solve", "--config", "/nonexistent/file.cfg"],
        ["solve", "--example", "2"],
    ],
)
def test_exit_code_config(argv, capsys):
    assert main(argv) == 2


def test_exit_code_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert main(["solve", "--n", "10", "--out", str(blocker / "x.csv")]) == 2
    assert "f" in capsys.readouterr().err


def test_exit_code_numerical(monkeypatch, capsys):
    import dbbsde.experiments as ex

    def fail(*a, **kw):
        raise NumericalError("non-finite value at node (j=1, up=0, jumps=0)")

    monkeypatch.setattr(ex, "solve", fail)
    assert main(["table", "--n_list", "10", "--p_list", "20"]) == 3
    monkeypatch.setattr("dbbsde.cli.solve", fail)
    assert main(["solve", "--n", "10"]) == 3
    assert "j=1" in capsys.readouterr().err


def test_exit_code_invariant(monkeypatch, capsys):
    from dbbsde.experiments import InvariantResult

    import dbbsde.cli as cli

    real = cli.run_audit

    def broken(*a, **kw):
        rep = real(*a, **kw)
        rep.results.append(InvariantResult("forced", False, 1.0))
        return rep

    monkeypatch.setattr(cli, "run_audit", broken)
    assert main(["check", "--n", "20", "--p", "20"]) == 4
    assert "[FAIL] forced" in capsys.readouterr().out


def test_check_passes(capsys):
    assert main(["check", "--n", "30", "--p", "100"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] oracle explicit n=6" in out
    assert "[SKIP] oracle implicit" in out  # C_g*delta = 1 at n=6, T=1
    assert "FAIL" not in out


def test_check_implicit_oracle_short_horizon(capsys):
    assert main(["check", "--n", "20", "--p", "100", "--T", "0.25", "--scheme", "implicit"]) == 0
    assert "[PASS] oracle implicit n=6" in capsys.readouterr().out


def test_solve_csv(tmp_path, capsys):
    out = tmp_path / "sol.csv"
    assert main(["solve", "--n", "5", "--p", "100", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "j,up,jumps,t,w,ntilde,xi,zeta,y,z,u,v,a,k"
    assert len(lines) == 2 + sum((j + 1) ** 2 for j in range(6))


def test_paths_and_compare(tmp_path, capsys):
    assert main(["paths", "--n", "50", "--p", "20000", "--count", "2", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["path_000.csv", "path_001.csv"]
    assert main(["compare", "--n_list", "20,40", "--p", "100", "--out", str(tmp_path / "cmp.csv")]) == 0
    assert "fitted order" in capsys.readouterr().out


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "dbbsde.cli", "solve", "--n", "10"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.splitlines()[0].count(".") == 1
