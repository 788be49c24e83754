"""Executable acceptance checks shared by ``csslab selfcheck`` and the test suite.

Every function returns a list of :class:`Check` records; nothing here asserts.
"""
from __future__ import annotations

import filecmp
import math
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from . import model_problem as mp
from .core_model import BoundaryDecayWarning, FieldPair, Grid1D, gaussian_profile, sech_profile
from .css_integrator import EvolutionConfig, evolve, linear_propagate, step
from .harness import ComparisonReport, ExperimentConfig, emit_outputs, run_compare
from .lax_scattering import SymmetryReport, build_table, scattering_matrix
from .nonlocal_reductions import ReductionKind, constrain_initial_data, constraint_deviation

CONFIG_DIR = Path(__file__).resolve().parent / "configs"


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


def _lt(name, value, tol, fmt=".2e"):
    return Check(name, bool(value < tol), f"{value:{fmt}} < {tol:g}")


# --------------------------------------------------------------------------
# scattering

def assess_symmetry(rep: SymmetryReport, det_tol=1e-8, uni_tol=1e-6, sym_tol=1e-6,
                    refl_tol=1e-8, prefix="") -> list[Check]:
    return [
        _lt(f"{prefix}|det s - 1|", rep.max_det_s_error, det_tol),
        _lt(f"{prefix}|s^H s - I|_F", rep.max_unitarity_error, uni_tol),
        _lt(f"{prefix}|a - s1 conj(a(-l)) s1|_F", rep.max_a_symmetry_error, sym_tol),
        _lt(f"{prefix}|conj(b(-l)) s1 - b|", rep.max_b_symmetry_error, sym_tol),
        _lt(f"{prefix}|1+|g(l)|^2 - 1-|g(-l)|^2|", rep.max_reflection_symmetry_error, refl_tol),
    ]


def symmetry_grid() -> Grid1D:
    return Grid1D(-40.0, 40.0, 1024)


def scattering_suite() -> list[Check]:
    """Symmetry checks for sech and Gaussian data with A in {0.1, 0.3} on [-2, 2], m = 64."""
    g = symmetry_grid()
    out = []
    for name, prof in (("sech", sech_profile), ("gaussian", gaussian_profile)):
        for amp in (0.1, 0.3):
            fp = FieldPair(g, prof(g.x, amp, 1.0, 0.0, 0.5), np.zeros(g.n))
            table = build_table(fp, 2.0, 64)
            out += assess_symmetry(table.report, prefix=f"{name} A={amp}: ")
    return out


def jost_order_suite(lambdas=(0.1, 0.5, 0.9, 1.3, 1.7)) -> list[Check]:
    """Step-halving gains at least 12x against a quarter-step reference."""
    g = Grid1D(-30.0, 30.0, 512)
    fp = FieldPair(g, sech_profile(g.x, 1.0, 1.0), np.zeros(g.n))
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryDecayWarning)
        for lam in lambdas:
            s1, s2, s4 = (scattering_matrix(fp, lam, refine=r) for r in (1, 2, 4))
            e1 = np.linalg.norm(s1 - s4)
            e2 = np.linalg.norm(s2 - s4)
            ratio = e1 / e2
            out.append(Check(f"Jost step-halving gain at lambda={lam}", bool(ratio >= 12),
                             f"{ratio:.1f} >= 12 (errors {e1:.1e}, {e2:.1e})"))
    return out


# --------------------------------------------------------------------------
# PDE integrator

def mass_drift_check() -> Check:
    g = Grid1D(-200.0, 200.0, 2048)
    fp = FieldPair(g, sech_profile(g.x, 0.3), np.zeros(g.n))
    traj = evolve(fp, EvolutionConfig(5e-4, 10.0))
    return _lt("mass drift over t in [0, 10]", traj.monitor.max_abs_drift, 1e-8)


def linear_regime_check() -> Check:
    g = Grid1D(-100.0, 100.0, 512)
    fp = FieldPair(g, sech_profile(g.x, 1e-6), np.zeros(g.n))
    one = step(fp, 1e-3)
    exact = linear_propagate(fp, 1e-3)
    err = float(max(np.max(np.abs(one.u - exact.u)), np.max(np.abs(one.v - exact.v))))
    return _lt("linear regime vs closed-form propagator", err, 1e-12)


def dt_refinement_check(dt=0.04, horizon=2.0) -> Check:
    g = Grid1D(-40.0, 40.0, 256)
    fp = FieldPair(g, sech_profile(g.x, 0.3), np.zeros(g.n))

    def run(d):
        return evolve(fp, EvolutionConfig(d, horizon, True, [horizon], c_stab=1e9)).snapshots[-1].u

    ua, ub, ref = run(dt), run(dt / 2), run(dt / 4)
    e1 = np.max(np.abs(ua - ref))
    e2 = np.max(np.abs(ub - ref))
    ratio = e1 / e2
    return Check("dt-halving gain", bool(ratio >= 12), f"{ratio:.1f} >= 12 (errors {e1:.1e}, {e2:.1e})")


def scaling_check(c=2.0, t=1.0) -> Check:
    """c u0(c x) evolved to t/c^3 equals c u(c x, t)."""
    g1 = Grid1D(-40.0, 40.0, 256)
    g2 = Grid1D(-40.0 / c, 40.0 / c, 256)
    u0 = sech_profile(g1.x, 0.3, 1.0, 0.5, 0.4)
    a = evolve(FieldPair(g1, u0, np.zeros(g1.n)), EvolutionConfig(2e-3, t, True, [t]))
    b = evolve(FieldPair(g2, c * u0, np.zeros(g2.n)),
               EvolutionConfig(2e-3 / c ** 3, t / c ** 3, True, [t / c ** 3]))
    ua = c * a.snapshots[-1].u
    ub = b.snapshots[-1].u
    rel = float(np.max(np.abs(ua - ub)) / np.max(np.abs(ua)))
    return _lt("scaling symmetry, two runs", rel, 1e-6)


def pde_suite() -> list[Check]:
    return [mass_drift_check(), linear_regime_check(), dt_refinement_check(), scaling_check()]


# --------------------------------------------------------------------------
# special functions and model problem

def sample_pcf_points(rng, count=100, max_abs_z=25.0, max_abs_a=10.0):
    """Random (a, zeta) in the implemented range, |zeta| capped to keep D_a representable."""
    pts = []
    while len(pts) < count:
        a = complex(rng.uniform(-max_abs_a, max_abs_a), rng.uniform(-max_abs_a, max_abs_a))
        if abs(a) > max_abs_a:
            continue
        z = rng.uniform(0, max_abs_z) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        pts.append((a, complex(z)))
    return pts


def special_function_suite(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    rec = refl = 0.0
    for _ in range(100):
        z = complex(rng.uniform(-10, 10), rng.uniform(-10, 10))
        gz = mp.complex_gamma(z)
        rec = max(rec, abs(mp.complex_gamma(z + 1) / (z * gz) - 1))
        refl = max(refl, abs(gz * mp.complex_gamma(1 - z) * np.sin(np.pi * z) / np.pi - 1))
    mod = max(abs(abs(mp.complex_gamma(1j * nu)) ** 2 * nu * math.sinh(math.pi * nu) / math.pi - 1)
              for nu in (0.1, 0.5, 1.0, 2.0))
    weber = 0.0
    # |a| <= 8 keeps the orders a - 1 and a - 2 used by the residual inside the range
    for a, z in sample_pcf_points(rng, max_abs_a=mp.MAX_ABS_A - 2):
        g = mp.parabolic_cylinder(a, z).value
        weber = max(weber, mp.weber_residual(a, z) / (1 + abs(g)))
    recur = mp.recurrence_residual(0.3 + 0.1j, 1.2 - 0.4j)
    return [
        _lt("Gamma recurrence (relative)", rec, 1e-10),
        _lt("Gamma reflection (relative)", refl, 1e-10),
        _lt("|Gamma(i nu)|^2 nu sinh(pi nu)/pi - 1", mod, 1e-10),
        _lt("Weber residual / (1+|D_a|), 100 points", weber, 1e-8),
        _lt("D_a derivative recurrence", recur, 1e-9),
    ]


def random_admissible_gamma(rng, scale=2.0):
    """gamma(lam0) and gamma(-lam0) = conj(gamma(lam0)) sigma1, plus nu."""
    g = scale * (rng.normal(size=4) + 1j * rng.normal(size=4)) / 2
    gm = np.conj(g)[[1, 0, 3, 2]]
    nu = math.log1p(float(np.sum(np.abs(g) ** 2))) / (2 * math.pi)
    return gm, g, nu


def beta_suite(seed: int = 0, count: int = 50) -> list[Check]:
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for _ in range(count):
        gm, g, nu = random_admissible_gamma(rng)
        worst = max(worst, mp.beta_coefficients(gm, g, nu).closure_residual)
    return [_lt(f"beta21 beta12 + nu, {count} datasets", worst, 1e-8)]


def delta_table():
    g = symmetry_grid()
    fp = FieldPair(g, sech_profile(g.x, 0.3, 1.0, 0.0, 0.5), np.zeros(g.n))
    return build_table(fp, 2.0, 64)


def delta_suite(lam0: float = 0.5, table=None) -> list[Check]:
    table = table or delta_table()
    far = max(abs(asy.det_delta(table, lam0, z) - 1)
              for z in (1e3j, -1e3j, 1e3 + 1e-3j, 1e3 * np.exp(0.75j * np.pi)))
    jump = 0.0
    for xi in np.linspace(-lam0, lam0, 12)[1:-1]:
        r = asy.jump_ratio(table, lam0, float(xi), eps=1e-4)
        jump = max(jump, abs(r - (1 + float(table.gamma_norm2(xi)))))
    return [
        _lt("|det delta - 1| at |lambda| = 1e3", far, 1e-3),
        _lt("jump ratio vs 1+|gamma|^2, 10 points", jump, 1e-6),
    ]


# --------------------------------------------------------------------------
# nonlocal reductions

def reduction_suite() -> list[Check]:
    g = Grid1D(-200.0, 200.0, 2048)
    u0 = sech_profile(g.x, 0.3, 1.0, 0.5, 0.7)
    times = [1.0, 2.0, 3.0, 4.0, 5.0]
    fp = constrain_initial_data(g, u0)
    fwd = evolve(fp, EvolutionConfig(5e-4, 5.0, True, times)).snapshots
    bwd = evolve(fp, EvolutionConfig(-5e-4, 5.0, True, times)).snapshots
    rt = constraint_deviation(fwd, ReductionKind.REVERSE_TIME)
    rst = constraint_deviation(fwd, ReductionKind.REVERSE_SPACE_TIME, bwd)
    free = FieldPair(g, u0, sech_profile(g.x, 0.3, 1.0, -1.0), 0.0)
    ctrl = constraint_deviation(evolve(free, EvolutionConfig(5e-4, 5.0, True, times)).snapshots,
                                ReductionKind.REVERSE_TIME)
    return [
        _lt("v = conj u(-x, t) preserved on [0, 5]", rt, 1e-6),
        _lt("v = conj u(-x, -t) preserved (backward run)", rst, 1e-5),
        Check("negative control deviation", bool(ctrl > 1e-2), f"{ctrl:.2e} > 0.01"),
    ]


# --------------------------------------------------------------------------
# headline comparison

def assess_comparison(report: ComparisonReport, lambda0: float | None = None) -> list[Check]:
    """Decay exponent, amplitude-error ordering and phase drift along one ray."""
    lams = sorted({r.lambda0 for r in report.rows})
    if not lams:
        return [Check("comparison rows present", True, "empty report (zero data)")]
    lam = lambda0 if lambda0 is not None else lams[0]
    rows = sorted(report.rows_for(lam), key=lambda r: r.t)
    if all(abs(r.u_num) == 0 and abs(r.u_pred) == 0 for r in rows):
        return [Check("zero data: numeric and predicted amplitudes vanish", True, "")]
    out = []
    expo = report.decay_exponents.get(lam, {}).get("u")
    out.append(Check("decay exponent of |u| in [-0.6, -0.4]",
                     expo is not None and -0.6 <= expo <= -0.4,
                     "n/a" if expo is None else f"{expo:.4f}"))
    errs = [r.u_amp_rel_error for r in rows]
    dec = all(b < a for a, b in zip(errs, errs[1:])) if None not in errs else False
    out.append(Check("amplitude error strictly decreasing in t", dec,
                     ", ".join("n/a" if e is None else f"{e:.4f}" for e in errs)))
    last = errs[-1]
    out.append(Check(f"amplitude error at t={rows[-1].t:g} < 15%",
                     last is not None and last < 0.15, "n/a" if last is None else f"{last:.4f}"))
    ph = {r.t: r.u_phase_diff for r in rows}
    if 100.0 in ph and 200.0 in ph:
        t1, t2 = 100.0, 200.0
    else:
        t1, t2 = rows[-2].t, rows[-1].t
    if ph.get(t1) is None or ph.get(t2) is None:
        out.append(Check("phase drift", False, "phase undefined"))
    else:
        drift = abs(ph[t2] - ph[t1])
        out.append(Check(f"phase-difference drift between t={t1:g} and t={t2:g} < 0.5 rad",
                         drift < 0.5, f"{drift:.4f}"))
    return out


def headline_config() -> ExperimentConfig:
    return ExperimentConfig.load(CONFIG_DIR / "headline.yaml")


def determinism_config() -> ExperimentConfig:
    return ExperimentConfig.load(CONFIG_DIR / "determinism.yaml")


def headline_suite(cfg: ExperimentConfig | None = None):
    cfg = cfg or headline_config()
    report, table, traj = run_compare(cfg)
    checks = [Check("solitonless (winding 0)", report.winding == 0, f"winding {report.winding}")]
    return checks + assess_comparison(report), report


def determinism_suite(cfg: ExperimentConfig | None = None) -> list[Check]:
    cfg = cfg or determinism_config()
    with tempfile.TemporaryDirectory() as tmp:
        dirs = []
        for k in range(2):
            d = Path(tmp) / f"run{k}"
            report, _, _ = run_compare(cfg)
            emit_outputs(report, d, cfg, "compare")
            dirs.append(d)
        names = sorted(p.name for p in dirs[0].iterdir())
        same = names == sorted(p.name for p in dirs[1].iterdir())
        match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
        ok = same and not mismatch and not errors
    return [Check("compare outputs byte-identical across runs", ok,
                  f"{len(match)} files identical" if ok else f"differ: {mismatch + errors}")]


def selfcheck(seed: int = 0, quick: bool = False) -> list[Check]:
    checks = scattering_suite() + jost_order_suite()
    if not quick:
        checks += pde_suite()
    checks += special_function_suite(seed) + beta_suite(seed) + delta_suite()
    if not quick:
        checks += reduction_suite()
    return checks
