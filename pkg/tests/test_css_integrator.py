import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csslab.core_model import FieldPair, Grid1D, gaussian_profile, sech_profile
from csslab.css_integrator import (
    EvolutionConfig, InstabilityError, evolve, linear_propagate, nonlinear_rhs,
    spectral_derivative, stability_bound, step,
)
from csslab.nonlocal_reductions import reflect


def _fd8(f, h):
    c = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
    return sum(ck * np.roll(f, -k) for ck, k in zip(c, range(-4, 5))) / h


@pytest.fixture(scope="module")
def grid():
    return Grid1D(-40.0, 40.0, 256)


def test_zero_field_rhs_and_step(grid):
    fp = FieldPair(grid, np.zeros(grid.n), np.zeros(grid.n))
    du, dv = nonlinear_rhs(fp)
    assert not np.any(du) and not np.any(dv)
    out = step(fp, 1e-3)
    assert out.t == 1e-3 and not np.any(out.u)


def test_zero_field_evolution():
    g = Grid1D(-20.0, 20.0, 64)
    fp = FieldPair(g, np.zeros(64), np.zeros(64))
    tr = evolve(fp, EvolutionConfig(0.01, 10.0, True, [5.0, 10.0]))
    assert all(not np.any(s.u) for s in tr.snapshots)
    assert tr.monitor.max_abs_drift == 0


def test_rhs_parity_for_even_real_data(grid):
    u = gaussian_profile(grid.x, 0.5, 0.3)
    fp = FieldPair(grid, u, np.zeros(grid.n))
    du, dv = nonlinear_rhs(fp, dealias=False)
    assert np.max(np.abs(du.imag)) < 1e-14
    assert np.max(np.abs(du + reflect(du))) < 1e-13
    assert not np.any(dv)


def test_spectral_derivative_matches_finite_differences():
    g = Grid1D(-20.0, 20.0, 1024)
    rng = np.random.default_rng(3)
    f = sum(rng.normal() * gaussian_profile(g.x, 1.0, 0.5, c, 0.7 * c)
            for c in rng.uniform(-5, 5, 4))
    d = spectral_derivative(f, g)
    fd = _fd8(f, g.h)
    assert np.max(np.abs(d - fd)) / np.max(np.abs(d)) < 1e-6


def test_linear_regime_one_step():
    g = Grid1D(-100.0, 100.0, 512)
    fp = FieldPair(g, sech_profile(g.x, 1e-6), np.zeros(g.n))
    err = np.max(np.abs(step(fp, 1e-3).u - linear_propagate(fp, 1e-3).u))
    assert err < 1e-12


def test_dt_refinement_order(grid):
    fp = FieldPair(grid, sech_profile(grid.x, 0.3), np.zeros(grid.n))

    def run(dt):
        return evolve(fp, EvolutionConfig(dt, 2.0, True, [2.0]), check_stability=False).snapshots[-1].u

    a, b, ref = run(0.04), run(0.02), run(0.01)
    assert np.max(np.abs(a - ref)) / np.max(np.abs(b - ref)) >= 12


def test_mass_drift_small():
    g = Grid1D(-50.0, 50.0, 512)
    fp = FieldPair(g, sech_profile(g.x, 0.3), np.zeros(g.n))
    tr = evolve(fp, EvolutionConfig(5e-4, 10.0))
    assert tr.monitor.max_abs_drift < 1e-8
    assert min(tr.monitor.mass) >= 0


def test_stability_bound_enforced(grid):
    fp = FieldPair(grid, np.zeros(grid.n), np.zeros(grid.n))
    dt = 2 * stability_bound(grid)
    with pytest.raises(ValueError, match="stability bound"):
        evolve(fp, EvolutionConfig(dt, 1.0))


def test_instability_abort_reports_last_good_time():
    g = Grid1D(-10.0, 10.0, 64)
    fp = FieldPair(g, sech_profile(g.x, 30.0), np.zeros(g.n), boundary_tol=1.0)
    with pytest.raises(InstabilityError) as info:
        evolve(fp, EvolutionConfig(0.05, 50.0), check_stability=False)
    assert 0 <= info.value.last_good_time < 50


def test_record_times_validated():
    with pytest.raises(ValueError):
        EvolutionConfig(0.1, 1.0, True, [2.0])


def test_reality_preserved_and_space_time_reflection(grid):
    u0 = sech_profile(grid.x, 0.4)
    fp = FieldPair(grid, u0, np.zeros(grid.n))
    fwd = evolve(fp, EvolutionConfig(2e-3, 2.0, True, [2.0])).snapshots[-1].u
    bwd = evolve(fp, EvolutionConfig(-2e-3, 2.0, True, [2.0])).snapshots[-1].u
    assert np.max(np.abs(fwd.imag)) < 1e-12
    # u(x, t) = u(-x, -t) for even data
    assert np.max(np.abs(fwd - reflect(bwd))) < 1e-12


@pytest.mark.xfail(strict=True, reason="odd x-derivatives break spatial parity at fixed t")
def test_parity_u_minus_x_equals_conj_u(grid):
    fp = FieldPair(grid, sech_profile(grid.x, 0.4), np.zeros(grid.n))
    u = evolve(fp, EvolutionConfig(2e-3, 2.0, True, [2.0])).snapshots[-1].u
    assert np.max(np.abs(reflect(u) - np.conj(u))) < 1e-8


def test_scaling_symmetry():
    c, t = 2.0, 1.0
    g1 = Grid1D(-40.0, 40.0, 256)
    g2 = Grid1D(-20.0, 20.0, 256)
    u0 = sech_profile(g1.x, 0.3, 1.0, 0.5, 0.4)
    a = evolve(FieldPair(g1, u0, np.zeros(256)), EvolutionConfig(2e-3, t, True, [t]))
    b = evolve(FieldPair(g2, c * u0, np.zeros(256)),
               EvolutionConfig(2e-3 / c ** 3, t / c ** 3, True, [t / c ** 3]))
    ua, ub = c * a.snapshots[-1].u, b.snapshots[-1].u
    assert np.max(np.abs(ua - ub)) / np.max(np.abs(ua)) < 1e-6


@settings(max_examples=6, deadline=None)
@given(st.floats(0.05, 0.5), st.floats(-1.0, 1.0), st.floats(0.05, 0.5))
def test_mass_conserved_random_data(amp, carrier, vamp):
    g = Grid1D(-25.0, 25.0, 256)
    fp = FieldPair(g, sech_profile(g.x, amp, 1.0, 0.0, carrier),
                   gaussian_profile(g.x, vamp, 0.5, 1.0, -carrier))
    tr = evolve(fp, EvolutionConfig(5e-4, 0.5))
    assert tr.monitor.max_abs_drift < 1e-8
