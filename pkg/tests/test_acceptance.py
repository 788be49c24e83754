"""Acceptance criteria 1-10, one PASS/FAIL line each (see the terminal summary)."""
import time

import pytest

from csslab import acceptance as acc


@pytest.fixture(scope="module")
def scattering_checks():
    start = time.perf_counter()
    checks = acc.scattering_suite()
    return checks, time.perf_counter() - start


def test_criterion_01_scattering_symmetry(scattering_checks, criterion_line):
    checks, elapsed = scattering_checks
    picked = [c for c in checks if "1+|g" not in c.name]
    picked.append(acc.Check("runtime <= 120 s", elapsed <= 120, f"{elapsed:.1f} s"))
    assert criterion_line(1, picked)


def test_criterion_02_reflection_symmetry(scattering_checks, criterion_line):
    checks, _ = scattering_checks
    assert criterion_line(2, [c for c in checks if "1+|g" in c.name])


def test_criterion_03_jost_order(criterion_line):
    assert criterion_line(3, acc.jost_order_suite())


def test_criterion_04_pde_integrator(criterion_line):
    assert criterion_line(4, acc.pde_suite())


def test_criterion_05_special_functions(criterion_line):
    assert criterion_line(5, acc.special_function_suite(seed=0))


def test_criterion_06_beta_identity(criterion_line):
    assert criterion_line(6, acc.beta_suite(seed=0))


def test_criterion_07_det_delta(criterion_line):
    assert criterion_line(7, acc.delta_suite())


def test_criterion_08_headline(criterion_line):
    start = time.perf_counter()
    checks, _ = acc.headline_suite()
    elapsed = time.perf_counter() - start
    checks.append(acc.Check("runtime <= 600 s", elapsed <= 600, f"{elapsed:.0f} s"))
    assert criterion_line(8, checks)


def test_criterion_09_nonlocal_reductions(criterion_line):
    assert criterion_line(9, acc.reduction_suite())


def test_criterion_10_determinism(criterion_line):
    assert criterion_line(10, acc.determinism_suite())
