import itertools
import math

import numpy as np
import pytest

from dbbsde.errors import ConfigError, ModelError
from dbbsde.explicit import solve_explicit
from dbbsde.lattice import layer_coordinates, make_grid
from dbbsde.model import (
    BarrierPair,
    ProblemSpec,
    check_barriers,
    example1,
    example2,
    example_driver,
    unconstrained,
    zero_driver,
)


def root_barriers(prob):
    xi, zeta = prob.barrier_layer(0)
    return float(xi[0, 0]), float(zeta[0, 0])


def test_example1_root_values():
    assert root_barriers(example1(make_grid(100, 1, 5))) == (1.0, 3.0)


@pytest.mark.parametrize("a, expected", [(-1.0, (0.0, 3.0)), (1.0, (1.0, 2.0))])
def test_example2_root_values(a, expected):
    assert root_barriers(example2(make_grid(100, 1, 5), a)) == expected


@pytest.mark.parametrize("make", [example1, lambda g: example2(g, -1), lambda g: example2(g, 1), lambda g: example2(g, 0)])
@pytest.mark.parametrize("n, T", [(1, 1.0), (7, 1.0), (50, 1.0), (33, 0.7)])
def test_barrier_ordering_and_terminal_equality(make, n, T):
    g = make_grid(n, T, 5)
    prob = make(g)
    for j in range(n + 1):
        xi, zeta = prob.barrier_layer(j)
        assert np.all(xi <= zeta)
    xi, zeta = prob.barrier_layer(n)
    _, w, nt = layer_coordinates(g, n)
    assert np.array_equal(xi, zeta)
    assert np.array_equal(xi, w * w + nt)


def test_example_driver_value():
    g = example_driver()
    assert g(0.0, 1.0, -1.0, 0.5) == 3.0
    assert g.lipschitz == 6.0


def test_driver_lipschitz_sampled():
    rng = np.random.default_rng(1234)
    g = example_driver()
    a = rng.normal(scale=10, size=(3, 10_000))
    b = rng.normal(scale=10, size=(3, 10_000))
    lhs = np.abs(g(0.0, *a) - g(0.0, *b))
    rhs = g.lipschitz * np.abs(a - b).sum(axis=0)
    assert np.all(lhs <= rhs + 1e-12)


def test_unconstrained_zero_everywhere():
    prob = unconstrained(make_grid(10, 1, 5), lambda t, w, nt: 0.0 * w)
    sol = solve_explicit(prob, full=True)
    for j in range(10):
        for f in ("y", "z", "u", "v", "a", "k"):
            assert not np.any(getattr(sol, f)[j])


def test_unconstrained_w_squared_two_steps():
    # brute force over the 16 two-step paths
    g = make_grid(2, 1, 5)
    k = g.kappa
    total = 0.0
    for (e1, j1), (e2, j2) in itertools.product(itertools.product((1, -1), (False, True)), repeat=2):
        pr = (((1 - k) if j1 else k) / 2) * (((1 - k) if j2 else k) / 2)
        total += pr * g.delta * (e1 + e2) ** 2
    assert total == pytest.approx(1.0, abs=1e-15)
    prob = unconstrained(g, lambda t, w, nt: w * w)
    assert solve_explicit(prob).y0 == pytest.approx(total, abs=1e-15)


def test_unconstrained_ntilde_is_martingale():
    prob = unconstrained(make_grid(30, 1, 5), lambda t, w, nt: nt)
    assert abs(solve_explicit(prob).y0) <= 1e-13


def test_crossed_barriers_abort():
    g = make_grid(4, 1, 5)

    def lower(t, w, nt):
        return np.where(t >= 1.0, w, w + 1.0)

    def upper(t, w, nt):
        return np.where(t >= 1.0, w, w - 1.0)

    prob = ProblemSpec(g, zero_driver(), BarrierPair(lower, upper), 10.0)
    with pytest.raises(ModelError, match="j=3"):
        solve_explicit(prob)


def test_terminal_barrier_mismatch():
    xi = np.zeros((2, 2))
    with pytest.raises(ModelError):
        check_barriers(xi, xi + 1, 1, terminal=True)
    check_barriers(xi, xi + 1, 1, terminal=False)


def test_negative_p_rejected():
    with pytest.raises(ConfigError):
        example1(make_grid(10, 1, 5), p=-1)
    with pytest.raises(ConfigError):
        example1(make_grid(10, 1, 5), p=math.nan)
