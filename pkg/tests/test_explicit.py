import warnings

import numpy as np
import pytest

from dbbsde.errors import ModelError, NumericalError, StabilityWarning
from dbbsde.explicit import explicit_step, solve_explicit
from dbbsde.lattice import make_grid
from dbbsde.model import BarrierPair, Driver, ProblemSpec, example1, example2, zero_driver
from dbbsde.oracle import oracle_solve


def one_step(terminal, driver=None):
    """n=1, T=1, p=1 so p*delta = 1; barriers 0 and 1 at t=0."""
    g = make_grid(1, 1.0, 5.0)

    def lower(t, w, nt):
        return terminal + 0.0 * w if t >= 1.0 else 0.0 * w

    def upper(t, w, nt):
        return terminal + 0.0 * w if t >= 1.0 else 1.0 + 0.0 * w

    return ProblemSpec(g, driver or zero_driver(), BarrierPair(lower, upper), 1.0)


@pytest.mark.parametrize(
    "terminal, y, a, k",
    [
        (-1.0, -0.5, 0.5, 0.0),  # a = pd*(y - xi)^- = 0.5
        (2.0, 1.5, 0.0, 0.5),  # k = pd*(zeta - y)^- = 0.5
        (3.0, 2.0, 0.0, 1.0),
        (-2.0, -1.0, 1.0, 0.0),
        (0.5, 0.5, 0.0, 0.0),
        (1.0, 1.0, 0.0, 0.0),
    ],
)
def test_hand_examples(terminal, y, a, k):
    sol = solve_explicit(one_step(terminal), full=True)
    assert sol.y0 == y
    assert sol.a[0][0, 0] == a and sol.k[0][0, 0] == k
    assert sol.z[0][0, 0] == 0.0


def test_hand_example_with_constant_driver():
    drv = Driver(lambda t, y, z, u: 2.0 + 0.0 * y, 0.0, "2")
    sol = solve_explicit(one_step(0.5, drv), full=True)
    # base = 0.5 + 2 = 2.5, k = (2.5 - 1) / 2
    assert sol.y0 == pytest.approx(1.75, abs=1e-15)
    assert sol.k[0][0, 0] == pytest.approx(0.75, abs=1e-15)


def test_no_penalty_at_p_zero():
    prob = example1(make_grid(40, 1, 5), p=0.0)
    sol = solve_explicit(prob, full=True, warn=False)
    for j in range(40):
        assert not np.any(sol.a[j]) and not np.any(sol.k[j])


@pytest.mark.parametrize("p", [0.0, 20.0, 1000.0])
@pytest.mark.parametrize("n", [2, 5, 8])
def test_matches_oracle(n, p):
    prob = example1(make_grid(n, 1.0, 5.0), p)
    lat = solve_explicit(prob, warn=False).y0
    ora = oracle_solve(prob).root
    assert abs(lat - ora) <= 1e-12 * max(1, abs(ora))


def test_fixed_point_identities():
    prob = example2(make_grid(100, 1, 5), -1.0, p=500.0)
    sol = solve_explicit(prob, full=True)
    pd = prob.p_delta
    for j in range(100):
        y, xi, zeta = sol.y[j], sol.xi[j], sol.zeta[j]
        scale = 1 + np.abs(sol.a[j]) + pd * (np.abs(y) + np.abs(xi))
        assert np.all(np.abs(sol.a[j] - pd * np.maximum(xi - y, 0)) <= 1e-12 * scale)
        assert np.all(np.abs(sol.k[j] - pd * np.maximum(y - zeta, 0)) <= 1e-12 * scale)
        assert np.all(sol.a[j] * sol.k[j] == 0)
        assert np.all(sol.a[j] >= 0) and np.all(sol.k[j] >= 0)


def test_thread_count_does_not_change_result():
    prob = example1(make_grid(120, 1, 5), 100.0)
    s1 = solve_explicit(prob, full=True, threads=1)
    s4 = solve_explicit(prob, full=True, threads=4)
    for j in range(120):
        for f in ("y", "z", "u", "v", "a", "k"):
            assert np.array_equal(getattr(s1, f)[j], getattr(s4, f)[j])


def test_partial_rows_match_full_layer():
    prob = example1(make_grid(10, 1, 5), 20.0)
    xi, zeta = prob.barrier_layer(5)
    y6 = solve_explicit(prob, full=True).y[6]
    whole = explicit_step(prob, 5, y6, xi, zeta)
    part = explicit_step(prob, 5, y6, xi, zeta, rows=slice(2, 4))
    assert np.array_equal(whole.y[2:4], part.y)


def test_stability_warning():
    prob = example1(make_grid(100, 1, 5), 20.0)
    with pytest.warns(StabilityWarning, match="n=100"):
        solve_explicit(prob)
    stable = ProblemSpec(make_grid(100, 1, 5), zero_driver(), prob.barriers, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_explicit(stable)


def test_barrier_crossing_raises():
    g = make_grid(3, 1, 5)
    prob = ProblemSpec(
        g,
        zero_driver(),
        BarrierPair(lambda t, w, nt: w + (t < 1) * 2.0, lambda t, w, nt: w + 0.0 * nt),
        1.0,
    )
    with pytest.raises(ModelError, match="j=2"):
        solve_explicit(prob)


def test_literal_penalty_diverges():
    prob = example1(make_grid(300, 1, 5), 20.0)
    assert abs(solve_explicit(prob, literal_penalty=True).y0) > 1e100


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_values_reported():
    drv = Driver(lambda t, y, z, u: np.where(t > 0.5, np.inf, 0.0) + 0.0 * y, 0.0)
    prob = ProblemSpec(make_grid(4, 1, 5), drv, example1(make_grid(4, 1, 5)).barriers, 1.0)
    with pytest.raises(NumericalError, match="non-finite value at node \\(j=3"):
        solve_explicit(prob)


def test_literal_penalty_same_when_driver_zero():
    prob = ProblemSpec(make_grid(30, 1, 5), zero_driver(), example1(make_grid(30, 1, 5)).barriers, 50.0)
    assert solve_explicit(prob).y0 == solve_explicit(prob, literal_penalty=True).y0


def test_store_selected_fields():
    prob = example1(make_grid(20, 1, 5), 20.0)
    sol = solve_explicit(prob, full=("y",))
    assert sol.y[5] is not None and sol.z[5] is None and sol.z[0] is not None
    assert not sol.full
