import numpy as np
import pytest

from dbbsde.errors import ConfigError, DBBSDEError
from dbbsde.explicit import solve_explicit
from dbbsde.lattice import make_grid
from dbbsde.model import example1
from dbbsde.trajectories import (
    TRAJECTORY_HEADER,
    _draw,
    emit_trajectory,
    sample_path,
    sample_paths,
    write_csv,
)


@pytest.fixture(scope="module")
def solved():
    prob = example1(make_grid(200, 1, 5), 20000.0)
    return prob, solve_explicit(prob, full=True)


def test_requires_full_solution():
    prob = example1(make_grid(10, 1, 5), 20.0)
    with pytest.raises(ConfigError):
        sample_path(prob, solve_explicit(prob), 0)


def test_same_seed_same_path(solved):
    prob, sol = solved
    a, b = sample_path(prob, sol, 42), sample_path(prob, sol, 42)
    for name in TRAJECTORY_HEADER:
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = sample_path(prob, sol, 43)
    assert not np.array_equal(a.e, c.e)


def test_path_columns_consistent(solved):
    prob, sol = solved
    s = sample_path(prob, sol, 7)
    g = prob.grid
    assert s.t[0] == 0 and s.t[-1] == 1.0
    assert s.e[0] == 0 and s.eta[0] == 0
    np.testing.assert_allclose(s.w, np.sqrt(g.delta) * np.cumsum(s.e), atol=1e-12)
    np.testing.assert_allclose(s.ntilde, np.cumsum(s.eta), atol=1e-12)
    assert s.a[-1] == 0 and s.k[-1] == 0
    assert np.array_equal(s.alpha, s.A - s.K)
    assert s.y[-1] == s.xi[-1] == s.zeta[-1]
    assert s.y[0] == sol.y0


def test_violation_small_along_paths(solved):
    prob, sol = solved
    assert max(s.max_violation() for s in sample_paths(prob, sol, 1, 20)) <= 0.05


def test_spawned_paths_independent(solved):
    prob, sol = solved
    paths = sample_paths(prob, sol, 5, 3)
    assert len({tuple(p.e) for p in paths}) == 3
    again = sample_paths(prob, sol, 5, 3)
    assert all(np.array_equal(p.y, q.y) for p, q in zip(paths, again))


def test_jump_frequency_within_three_se():
    k = make_grid(100, 1, 5).kappa
    n = 100_000
    e, jump = _draw(n, k, np.random.default_rng(2024))
    se = np.sqrt(k * (1 - k) / n)
    assert abs(jump.mean() - (1 - k)) <= 3 * se
    assert abs((e > 0).mean() - 0.5) <= 3 * np.sqrt(0.25 / n)


def test_csv_roundtrip(tmp_path, solved):
    prob, sol = solved
    s = sample_path(prob, sol, 11)
    out = emit_trajectory(s, tmp_path / "p.csv", prob)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# generator=numpy.random.PCG64")
    assert lines[1] == "# seed=11"
    header = next(i for i, line in enumerate(lines) if not line.startswith("#"))
    assert lines[header].split(",") == list(TRAJECTORY_HEADER)
    data = np.loadtxt(lines[header + 1 :], delimiter=",")
    assert data.shape == (201, len(TRAJECTORY_HEADER))
    assert np.array_equal(data[:, 5], s.y)
    emit_trajectory(s, tmp_path / "q.csv", prob)
    assert (tmp_path / "q.csv").read_bytes() == out.read_bytes()


def test_write_failure_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(DBBSDEError, match="file"):
        write_csv(blocker / "sub" / "out.csv", ["a"], [[1]])
    assert list(tmp_path.iterdir()) == [blocker]


def test_empty_table_is_header_only(tmp_path):
    out = write_csv(tmp_path / "t.csv", ["p", "n=100"], [])
    assert out.read_text() == "p,n=100\n"
