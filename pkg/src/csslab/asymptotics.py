"""Leading-order long-time asymptotics on the rays x = -12 lam0^2 t.

Everything here is a pure function of a reflection table (anything exposing
``gamma(lam)``, ``gamma_norm2(lam)`` and ``gamma_norm2_derivative(lam)``, e.g.
:class:`csslab.lax_scattering.ScatteringTable`) and the point (x, t).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model_problem import arg_gamma_imag

GL_NODES = 64
QUAD_TOL = 1e-6
PROXIMITY_TOL = 1e-6


class QuadratureAccuracyError(ArithmeticError):
    """The 64- and 128-node estimates of an integral disagree."""


class ProximityError(ValueError):
    """Evaluation point too close to the jump segment [-lam0, lam0]."""


@lru_cache(maxsize=None)
def _gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def _gl(f, a: float, b: float, n: int):
    s, w = _gauss_legendre_unit(n)
    return (b - a) * np.sum(w * f(a + (b - a) * s))


def stationary_point(x: float, t: float) -> float:
    """lam0 = sqrt(-x / (12 t)); defined for x < 0 < t."""
    if not t > 0:
        raise ValueError(f"t={t} must be positive")
    if not x < 0:
        raise ValueError(f"x={x} must be negative on the rays x = -12 lam0^2 t")
    return math.sqrt(-x / (12 * t))


def theta(lam, x: float, t: float):
    """lam (x/t + 4 lam^2)."""
    return lam * (x / t + 4 * lam ** 2)


def nu_from_norm2(g2: float) -> float:
    return math.log1p(g2) / (2 * math.pi)


def nu_of(table, lam0: float) -> float:
    """(1/2pi) log(1 + |gamma(lam0)|^2)."""
    return nu_from_norm2(float(table.gamma_norm2(lam0)))


def _log_ratio(table, lam0: float):
    g0 = float(table.gamma_norm2(lam0))

    def f(xi):
        return np.log1p(table.gamma_norm2(xi)) - math.log1p(g0)

    return f


def _phase_integral_n(table, lam0: float, n: int) -> float:
    f = _log_ratio(table, lam0)
    # left half: xi = -lam0 + lam0 s^2 turns f(xi) / (xi + lam0) dxi into 2 f / s ds
    left = _gl(lambda s: 2 * f(-lam0 + lam0 * s * s) / s, 0.0, 1.0, n)
    right = _gl(lambda xi: f(xi) / (xi + lam0), 0.0, lam0, n)
    return float((left + right) / math.pi)


def phase_integral(table, lam0: float, nodes: int = GL_NODES, tol: float = QUAD_TOL) -> float:
    """(1/pi) int_{-lam0}^{lam0} log[(1+|gamma(xi)|^2)/(1+|gamma(lam0)|^2)] dxi/(xi+lam0)."""
    if not lam0 > 0:
        raise ValueError("lam0 must be positive")
    if not (table.contains(-lam0) and table.contains(lam0)):
        raise ValueError(f"[-{lam0}, {lam0}] not inside the table range")
    coarse = _phase_integral_n(table, lam0, nodes)
    fine = _phase_integral_n(table, lam0, 2 * nodes)
    if abs(fine - coarse) > tol:
        raise QuadratureAccuracyError(
            f"phase integral estimates differ by {abs(fine - coarse):.2e} (> {tol:g})")
    return fine


@dataclass(frozen=True)
class PhaseTerms:
    linear: float        # 16 t lam0^3
    arg_gamma: float     # arg Gamma(i nu)
    log_term: float      # nu log(192 lam0^3 t)
    integral: float
    constant: float = -5 * math.pi / 4
    degenerate: bool = False

    @property
    def total(self) -> float:
        return self.linear + self.arg_gamma + self.log_term + self.integral + self.constant


def phase_terms(x: float, t: float, table) -> PhaseTerms:
    lam0 = stationary_point(x, t)
    nu = nu_of(table, lam0)
    return PhaseTerms(
        linear=16 * t * lam0 ** 3,
        arg_gamma=arg_gamma_imag(nu),
        log_term=nu * math.log(192 * lam0 ** 3 * t),
        integral=phase_integral(table, lam0),
        degenerate=(nu == 0),
    )


def phi(x: float, t: float, table) -> float:
    """Unreduced phase; at nu = 0 the arg Gamma term takes its limit -pi/2."""
    return phase_terms(x, t, table).total


@dataclass(frozen=True)
class AsymptoticEvaluation:
    x: float
    t: float
    lambda0: float
    nu: float
    phase_integral: float
    phi: float
    u_as: complex
    v_as: complex
    prefactor: float     # sqrt(nu) / (sqrt(12 lam0) |gamma(lam0)|)
    degenerate: bool = False

    @property
    def u_pred(self) -> complex:
        return self.u_as / math.sqrt(self.t)

    @property
    def v_pred(self) -> complex:
        return self.v_as / math.sqrt(self.t)


def _amplitude_prefactor(g2: float, lam0: float) -> float:
    # sqrt(nu)/|gamma| = sqrt(log1p(g2) / g2 / 2pi), with limit 1/sqrt(2pi) as g2 -> 0
    ratio = math.log1p(g2) / g2 if g2 > 0 else 1.0
    return math.sqrt(ratio / (2 * math.pi)) / math.sqrt(12 * lam0)


def _pair(c: float, ph: float, g_plus: complex, g_minus: complex) -> complex:
    # |g+| e^{i(phi + arg g+)} + |g-| e^{-i(phi + arg g-)}
    return c * (abs(g_plus) * cmath.exp(1j * (ph + cmath.phase(g_plus)))
                + abs(g_minus) * cmath.exp(-1j * (ph + cmath.phase(g_minus))))


def leading_order(x: float, t: float, table) -> AsymptoticEvaluation:
    """u_as, v_as at (x, t); the prediction itself is u_as / sqrt(t)."""
    terms = phase_terms(x, t, table)
    lam0 = stationary_point(x, t)
    g = np.asarray(table.gamma(lam0), dtype=complex)
    g2 = float(np.sum(np.abs(g) ** 2))
    nu = nu_from_norm2(g2)
    c = _amplitude_prefactor(g2, lam0)
    ph = terms.total
    return AsymptoticEvaluation(
        x=float(x), t=float(t), lambda0=lam0, nu=nu,
        phase_integral=terms.integral, phi=ph,
        u_as=_pair(c, ph, g[1], g[0]),
        v_as=_pair(c, ph, g[3], g[2]),
        prefactor=c,
        degenerate=terms.degenerate,
    )


def ray_points(lam0: float, times) -> list[tuple[float, float]]:
    return [(-12 * lam0 ** 2 * float(t), float(t)) for t in times]


# --------------------------------------------------------------------------
# det delta

def _segment_distance(lam: complex, lam0: float) -> float:
    xr = min(max(lam.real, -lam0), lam0)
    return abs(lam - xr)


def _chi_n(table, lam0: float, lam: complex, n: int) -> complex:
    f = _log_ratio(table, lam0)
    x0 = min(max(lam.real, -lam0), lam0)
    f0 = float(f(x0))
    df0 = float(table.gamma_norm2_derivative(x0)) / (1 + float(table.gamma_norm2(x0)))

    # subtract the first-order Taylor polynomial at Re lam; the remainder is smooth
    # enough for Gauss-Legendre on panels split at Re lam
    def rem(xi):
        return (f(xi) - f0 - df0 * (xi - x0)) / (xi - lam)

    total = 0j
    for a, b in ((-lam0, x0), (x0, lam0)):
        if b > a:
            total += _gl(rem, a, b, n)
    log_term = cmath.log(lam0 - lam) - cmath.log(-lam0 - lam)  # int dxi / (xi - lam)
    total += f0 * log_term + df0 * (2 * lam0 + (lam - x0) * log_term)
    return total / (2j * math.pi)


def chi(table, lam0: float, lam: complex, nodes: int = GL_NODES, tol: float = QUAD_TOL) -> complex:
    """(1/2 pi i) int_{-lam0}^{lam0} log[(1+|gamma|^2)/(1+|gamma(lam0)|^2)] dxi/(xi - lam)."""
    lam = complex(lam)
    if _segment_distance(lam, lam0) < PROXIMITY_TOL:
        raise ProximityError(f"lambda={lam} within {PROXIMITY_TOL:g} of [-{lam0}, {lam0}]")
    coarse = _chi_n(table, lam0, lam, nodes)
    fine = _chi_n(table, lam0, lam, 2 * nodes)
    if abs(fine - coarse) > tol:
        raise QuadratureAccuracyError(
            f"chi estimates differ by {abs(fine - coarse):.2e} at lambda={lam}")
    return fine


def chi_at_minus_lam0(table, lam0: float) -> complex:
    """chi(-lam0): the integrand is regular there and the value is -i/2 times the phase integral."""
    return -0.5j * phase_integral(table, lam0)


def det_delta(table, lam0: float, lam: complex) -> complex:
    """((lam + lam0)/(lam - lam0))^{i nu} e^{chi(lam)}, principal branches."""
    lam = complex(lam)
    if _segment_distance(lam, lam0) < PROXIMITY_TOL:
        raise ProximityError(f"lambda={lam} within {PROXIMITY_TOL:g} of [-{lam0}, {lam0}]")
    nu = nu_of(table, lam0)
    power = cmath.exp(1j * nu * cmath.log((lam + lam0) / (lam - lam0)))
    return power * cmath.exp(chi(table, lam0, lam))


def jump_ratio(table, lam0: float, xi: float, eps: float = 1e-4, extrapolate: bool = True) -> complex:
    """det delta(xi + i eps) / det delta(xi - i eps) for real xi in (-lam0, lam0).

    The raw ratio approaches its boundary value linearly in eps; with
    ``extrapolate`` the eps and eps/2 ratios are combined (Richardson) so the
    remaining error is O(eps^2).
    """

    def raw(e):
        return det_delta(table, lam0, xi + 1j * e) / det_delta(table, lam0, xi - 1j * e)

    r = raw(eps)
    if not extrapolate:
        return r
    return 2 * raw(eps / 2) - r


@dataclass(frozen=True)
class DeltaDiagnostic:
    lam: complex
    det_delta: complex
    bound: float

    @property
    def within_bound(self) -> bool:
        return abs(self.det_delta) <= self.bound * (1 + 1e-12)


def delta_bound(table, lam0: float, nodes: int = 257) -> float:
    """e^{pi nu} e^{max|f|/2} with f the log ratio on [-lam0, lam0].

    |power| <= e^{pi nu} since the argument of (lam+lam0)/(lam-lam0) lies in
    (-pi, pi], and Re chi is half a Poisson average of f.
    """
    nu = nu_of(table, lam0)
    f = _log_ratio(table, lam0)
    fmax = float(np.max(np.abs(f(np.linspace(-lam0, lam0, nodes)))))
    return math.exp(math.pi * nu + 0.5 * fmax)


def delta_diagnostic(table, lam0: float, lam: complex, bound: float | None = None) -> DeltaDiagnostic:
    b = delta_bound(table, lam0) if bound is None else bound
    return DeltaDiagnostic(complex(lam), det_delta(table, lam0, lam), b)
