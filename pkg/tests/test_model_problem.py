import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csslab import model_problem as mp
from csslab.asymptotics import chi_at_minus_lam0, leading_order
from csslab.core_model import SIGMA1
from csslab.lax_scattering import ScatteringTable

mpmath.mp.dps = 30


def _ref_gamma(z):
    return complex(mpmath.gamma(z))


def _ref_pcf(a, z):
    return complex(mpmath.pcfd(a, z))


def test_gamma_special_values():
    assert mp.complex_gamma(1) == pytest.approx(1, rel=1e-14)
    assert mp.complex_gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    g = abs(mp.complex_gamma(0.5j))
    assert g ** 2 == pytest.approx(math.pi / (0.5 * math.sinh(0.5 * math.pi)), rel=1e-12)
    assert g == pytest.approx(1.65236, abs=1e-5)


@settings(max_examples=200)
@given(st.complex_numbers(max_magnitude=20))
def test_gamma_matches_reference(z):
    if z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real):
        return
    if abs(z - round(z.real)) < 1e-6 and z.real < 0.5:
        return
    ref = _ref_gamma(z)
    if not math.isfinite(abs(ref)) or abs(ref) == 0:
        return
    assert abs(mp.complex_gamma(z) / ref - 1) < 1e-12


@given(st.complex_numbers(max_magnitude=10).filter(lambda z: min(abs(z - n) for n in range(-11, 12)) > 1e-3))
def test_gamma_reflection_identity(z):
    val = mp.complex_gamma(z) * mp.complex_gamma(1 - z) * cmath.sin(math.pi * z) / math.pi
    assert abs(val - 1) < 1e-10


def test_gamma_pole():
    with pytest.raises(mp.GammaPoleError):
        mp.complex_gamma(-3)
    assert mp.rgamma(-3) == 0


def test_arg_gamma_limit():
    assert mp.arg_gamma_imag(0.0) == -math.pi / 2
    assert mp.arg_gamma_imag(1e-9) == pytest.approx(-math.pi / 2, abs=1e-8)
    assert mp.arg_gamma_imag(0.7) == pytest.approx(float(mpmath.arg(mpmath.gamma(0.7j))), abs=1e-13)


def test_d0_closed_form():
    assert mp.pcf(0, 1.0) == pytest.approx(math.exp(-0.25), rel=1e-14)


def test_recurrence_example():
    assert mp.recurrence_residual(0.3 + 0.1j, 1.2 - 0.4j) < 1e-9


def test_connection_formula_example():
    a, z = 0.25j, 2 + 1j
    assert abs(mp.pcf(a, z) - mp.connection_rhs(a, z)) < 1e-8


@pytest.mark.parametrize("a, z", [
    (0.5, 1.0), (-0.3 + 0.4j, 3.0 - 2.0j), (2.0 + 1.0j, 6.0 * cmath.exp(2.2j)),
    (-4.5 + 6.0j, 7.5 * cmath.exp(1.1j)), (9.6j, 7.4 * cmath.exp(0.97j)),
    (-8.5 + 0.2j, 8.75 * cmath.exp(-0.8j)), (3.0, 20.0 * cmath.exp(2.0j)), (1.5 - 2j, 40.0),
    # integer and near-integer orders, where D_a is recessive in an unusual sector
    (0.0, 7.0 * cmath.exp(3.0j)), (4.0, 9.56 * cmath.exp(2.99j)),
    (-8.0 + 7.4e-8, 0.5906 - 3.6242j), (9.0 + 1e-6, 1.9 * cmath.exp(-2.4j)),
])
def test_pcf_matches_reference(a, z):
    p = mp.parabolic_cylinder(a, z)
    assert abs(p.value / _ref_pcf(a, z) - 1) < 1e-9
    dref = complex(mpmath.diff(lambda t: mpmath.pcfd(a, t), z))
    assert abs(p.derivative / dref - 1) < 1e-8


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 10), st.floats(-math.pi, math.pi), st.floats(1e-6, 12), st.floats(-math.pi, math.pi))
def test_pcf_random_points_match_reference(abs_a, arg_a, r, th):
    a = abs_a * cmath.exp(1j * arg_a)
    z = r * cmath.exp(1j * th)
    ref = _ref_pcf(a, z)
    if ref == 0:
        return
    assert abs(mp.pcf(a, z) / ref - 1) < 1e-8


@settings(max_examples=60, deadline=None)
@given(st.floats(-8, 8), st.floats(-8, 8), st.floats(1e-6, 25), st.floats(-math.pi, math.pi))
def test_weber_residual_bound(ar, ai, r, th):
    a = complex(ar, ai)
    if abs(a) > 8:
        return
    z = r * cmath.exp(1j * th)
    g = mp.pcf(a, z)
    assert mp.weber_residual(a, z) <= 1e-8 * (1 + abs(g))


def test_pcf_range_errors():
    with pytest.raises(mp.PCFRangeError):
        mp.parabolic_cylinder(0.5, 60)
    with pytest.raises(mp.PCFRangeError):
        mp.parabolic_cylinder(11, 1)


def test_stokes_boundary_flag():
    assert mp.parabolic_cylinder(0.5, 9 * cmath.exp(0.75j * math.pi)).flagged
    assert not mp.parabolic_cylinder(0.5, 9 * cmath.exp(0.5j * math.pi)).flagged


def _admissible(rng, scale=2.0):
    g = scale * (rng.normal(size=4) + 1j * rng.normal(size=4)) / 2
    return np.conj(g) @ SIGMA1, g, math.log1p(float(np.sum(np.abs(g) ** 2))) / (2 * math.pi)


def test_beta_zero_data():
    b = mp.beta_coefficients(np.zeros(4), np.zeros(4), 0.0)
    assert b.product == 0 and b.closure_residual == 0


def test_beta_scalar_reduction():
    g = 0.8 - 0.3j
    gp = np.array([g, 0, 0, 0])
    nu = math.log1p(abs(g) ** 2) / (2 * math.pi)
    b = mp.beta_coefficients(np.conj(gp) @ SIGMA1, gp, nu)
    assert abs(b.product + nu) < 1e-8


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32 - 1))
def test_beta_closure_and_adjoint(seed):
    gm, gp, nu = _admissible(np.random.default_rng(seed))
    b = mp.beta_coefficients(gm, gp, nu)
    assert b.closure_residual < 1e-8
    assert np.max(np.abs(b.beta12 + np.conj(b.beta21))) < 1e-12
    assert np.linalg.norm(b.beta12) == pytest.approx(math.sqrt(nu), rel=1e-12)


def test_beta_rejects_inconsistent_norms():
    with pytest.raises(mp.BetaConsistencyError):
        mp.beta_coefficients(np.array([1, 0, 0, 0]), np.array([2, 0, 0, 0]), 0.1)


def test_delta_a_unimodular():
    assert abs(mp.delta_a(0.0, 2.0, 0.3)) == pytest.approx(1.0, abs=1e-15)
    assert abs(mp.delta_a(0.2 - 1j, 2.0, 0.3)) == pytest.approx(math.exp(0.2), rel=1e-14)


def test_model_m1_12_zero():
    b = mp.BetaPair(np.zeros(4, complex), np.zeros(4, complex), 0.0)
    assert not np.any(mp.model_m1_12(b, 1.0 + 0j))


def test_model_m1_12_matches_leading_order_amplitudes():
    def gamma_fn(lam):
        return np.array([0.6 * math.exp(-lam ** 2) * cmath.exp(0.3j * lam),
                         0.2 * math.exp(-(lam - 0.4) ** 2), 0, 0])

    # symmetrised so that gamma(-lam) = conj(gamma(lam)) sigma1
    def sym(lam):
        g = gamma_fn(lam)
        return 0.5 * (g + np.conj(gamma_fn(-lam)) @ SIGMA1)

    table = ScatteringTable.from_function(sym, 2.0, 64)
    lam0, t = 0.5, 40.0
    x = -12 * lam0 ** 2 * t
    ev = leading_order(x, t, table)
    gp = table.gamma(lam0)
    gm = table.gamma(-lam0)
    beta = mp.beta_coefficients(gm, gp, ev.nu)
    dA = mp.delta_a(chi_at_minus_lam0(table, lam0), lam0 ** 3 * t, ev.nu)
    m = mp.model_m1_12(beta, dA)
    coef = math.sqrt(ev.nu) / (math.sqrt(12 * lam0) * np.linalg.norm(gp))
    # component k of m pairs with sigma1 gamma: |m_0| <-> |gamma_2|, |m_1| <-> |gamma_1|
    assert abs(m[0]) == pytest.approx(math.sqrt(12 * lam0) * coef * abs(gp[1]), rel=1e-6)
    assert abs(m[1]) == pytest.approx(math.sqrt(12 * lam0) * coef * abs(gp[0]), rel=1e-6)
