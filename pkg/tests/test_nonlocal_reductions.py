import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csslab.core_model import FieldPair, Grid1D, sech_profile
from csslab.css_integrator import EvolutionConfig, evolve
from csslab.nonlocal_reductions import (
    MissingBackwardRunError, ReductionKind, constrain_initial_data, constraint_deviation,
    pointwise_deviation, reflect,
)


@pytest.fixture(scope="module")
def grid():
    return Grid1D(-20.0, 20.0, 128)


def test_reflect_index_map(grid):
    x = grid.x
    assert np.allclose(reflect(x)[1:], -x[1:])
    assert reflect(x)[0] == x[0]
    assert np.array_equal(reflect(reflect(x)), x)


def test_real_even_data_is_fixed(grid):
    u0 = sech_profile(grid.x, 0.4)
    fp = constrain_initial_data(grid, u0)
    assert np.allclose(fp.v, u0, atol=1e-15)


def test_carrier_sech_is_fixed(grid):
    u0 = np.exp(1j * grid.x) / np.cosh(grid.x)
    fp = constrain_initial_data(grid, u0, "reverse_space_time")
    # the j = 0 sample is its own mirror image on the periodic grid, where e^{ix} is not even
    assert np.max(np.abs(fp.v - u0)[1:]) < 1e-15


@given(st.integers(0, 2 ** 32 - 1))
def test_constraint_is_idempotent(seed):
    g = Grid1D(-5.0, 5.0, 32)
    rng = np.random.default_rng(seed)
    u0 = rng.normal(size=32) + 1j * rng.normal(size=32)
    once = constrain_initial_data(g, u0)
    twice = constrain_initial_data(g, once.u)
    assert np.array_equal(once.v, twice.v)
    assert pointwise_deviation(once.v, once.u) == 0


def test_asymmetric_grid_rejected():
    g = Grid1D(-5.0, 10.0, 32)
    with pytest.raises(ValueError, match="symmetric"):
        constrain_initial_data(g, np.zeros(32))


def test_unknown_kind_rejected(grid):
    with pytest.raises(ValueError):
        constrain_initial_data(grid, np.zeros(grid.n), "reverse_space")


def test_zero_data_deviation(grid):
    fp = FieldPair(grid, np.zeros(grid.n), np.zeros(grid.n))
    snaps = [fp, fp]
    assert constraint_deviation(snaps, ReductionKind.REVERSE_TIME) == 0
    assert constraint_deviation(snaps, ReductionKind.REVERSE_SPACE_TIME, snaps) == 0
    assert constraint_deviation([], ReductionKind.REVERSE_TIME) == 0


def test_space_time_kind_needs_backward_run(grid):
    fp = FieldPair(grid, np.zeros(grid.n), np.zeros(grid.n))
    with pytest.raises(MissingBackwardRunError):
        constraint_deviation([fp], "reverse_space_time")


def test_backward_times_must_pair():
    g = Grid1D(-20.0, 20.0, 128)
    fp = constrain_initial_data(g, sech_profile(g.x, 0.2))
    fwd = evolve(fp, EvolutionConfig(1e-3, 0.2, True, [0.1, 0.2])).snapshots
    with pytest.raises(ValueError, match="pair"):
        constraint_deviation(fwd, "reverse_space_time", fwd)


@pytest.fixture(scope="module")
def constrained_runs():
    g = Grid1D(-60.0, 60.0, 512)
    u0 = sech_profile(g.x, 0.3, 1.0, 0.5, 0.7)
    fp = constrain_initial_data(g, u0)
    times = [0.5, 1.0]
    fwd = evolve(fp, EvolutionConfig(1e-3, 1.0, True, times)).snapshots
    bwd = evolve(fp, EvolutionConfig(-1e-3, 1.0, True, times)).snapshots
    return g, u0, fwd, bwd


def test_reverse_space_time_constraint_preserved(constrained_runs):
    _, _, fwd, bwd = constrained_runs
    assert constraint_deviation(fwd, "reverse_space_time", bwd) < 1e-5


def test_reverse_time_constraint_not_preserved(constrained_runs):
    # the flow commutes with conj u(-x, -t), not with conj u(-x, t): off-centre data
    # drifts away from the reverse-time constraint at first order in t
    _, _, fwd, _ = constrained_runs
    assert constraint_deviation(fwd, "reverse_time") > 1e-4


def test_negative_control(constrained_runs):
    g, u0, _, _ = constrained_runs
    free = FieldPair(g, u0, sech_profile(g.x, 0.3, 1.0, -1.0))
    assert pointwise_deviation(free.v, free.u) > 0.1
    snaps = evolve(free, EvolutionConfig(1e-3, 1.0, True, [1.0])).snapshots
    assert constraint_deviation(snaps, "reverse_time") > 1e-2
