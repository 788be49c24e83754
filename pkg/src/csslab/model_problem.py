"""Special functions for the parabolic-cylinder model problem.

Complex Gamma (Lanczos, g = 607/128), the parabolic cylinder function D_a(z)
with its derivative, and the coefficient pair (beta21, beta12) of the local
model problem at the stationary point.

D_a is evaluated as follows.

* |z| <= r_s(a) = min(3.5, 4/sqrt|a|): Maclaurin series of the even/odd
  solutions of Weber's equation, combined with the closed-form values D_a(0),
  D_a'(0).  The radius shrinks with |a| because the series cancels badly for
  large orders.
* |z| >= 10: large-argument expansion, one exponential for |arg z| <= pi/2
  and two exponentials (connection-corrected) beyond.
* in between: the Weber ODE is integrated along the ray through z, inward from
  radius 10 when D_a is recessive there (|arg z| <= pi/4), outward from
  radius r_s(a) otherwise.  Both directions are the numerically stable ones.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core_model import SIGMA1

SERIES_RADIUS = 3.5
ASYMPTOTIC_RADIUS = 10.0
INWARD_START = 14.0  # asymptotic seed for inward ray integration
CONSENSUS_TOL = 1e-9
MAX_ABS_Z = 50.0
MAX_ABS_A = 10.0

_LANCZOS_G = 607 / 128
_LANCZOS = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)


class GammaPoleError(ValueError):
    pass


class PCFRangeError(ValueError):
    pass


def _log_gamma_right(z: complex) -> complex:
    # valid for Re z >= 1/2
    z = z - 1
    acc = _LANCZOS[0]
    for k, c in enumerate(_LANCZOS[1:], start=1):
        acc += c / (z + k)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2 * math.pi) + (z + 0.5) * cmath.log(t) - t + cmath.log(acc)


def complex_gamma(z) -> complex:
    """Gamma(z) for complex z; reflection formula for Re z < 1/2."""
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real):
        raise GammaPoleError(f"Gamma has a pole at {z}")
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * cmath.exp(_log_gamma_right(1 - z)))
    return cmath.exp(_log_gamma_right(z))


def rgamma(z) -> complex:
    """1/Gamma(z), zero at the poles; no overflow near them."""
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real):
        return 0j
    if z.real < 0.5:
        return cmath.sin(math.pi * z) * cmath.exp(_log_gamma_right(1 - z)) / math.pi
    return cmath.exp(-_log_gamma_right(z))


def arg_gamma_imag(nu: float) -> float:
    """Principal argument of Gamma(i nu); the nu -> 0+ limit -pi/2 at nu = 0."""
    if nu == 0:
        return -math.pi / 2
    return cmath.phase(complex_gamma(1j * nu))


# --------------------------------------------------------------------------
# parabolic cylinder functions

@dataclass(frozen=True)
class PCFValue:
    a: complex
    zeta: complex
    value: complex
    derivative: complex
    method: str = ""
    flagged: bool = False


def _origin_values(a: complex) -> tuple[complex, complex]:
    d0 = 2 ** (a / 2) * math.sqrt(math.pi) * rgamma((1 - a) / 2)
    d1 = -(2 ** ((a + 1) / 2)) * math.sqrt(math.pi) * rgamma(-a / 2)
    return d0, d1


def _weber_series(a: complex, z: complex, c0: complex, c1: complex, tol=1e-17, max_terms=400):
    """g, g', g'' at z for the Weber solution with g(0)=c0, g'(0)=c1.

    Coefficients from (n+2)(n+1) c_{n+2} = -(a + 1/2) c_n + c_{n-2} / 4.
    """
    coeffs = [c0, c1]
    g = dg = d2g = 0j
    pw = [0j, 0j, 1 + 0j]  # z**(n-2), z**(n-1), z**n
    n = 0
    small = 0
    while n < max_terms:
        if n >= 2:
            prev2 = coeffs[n - 4] if n >= 4 else 0
            coeffs.append((-(a + 0.5) * coeffs[n - 2] + 0.25 * prev2) / (n * (n - 1)))
        c = coeffs[n]
        term = c * pw[2]
        g += term
        dg += n * c * pw[1]
        d2g += n * (n - 1) * c * pw[0]
        scale = abs(g) + abs(dg) + 1e-300
        if abs(term) * (n + 1) ** 2 <= tol * scale and n > 4:
            small += 1
            if small >= 4:
                break
        else:
            small = 0
        pw = [pw[1], pw[2], pw[2] * z]
        n += 1
    return g, dg, d2g


def _asym_sum(mult: complex, w: complex, terms: int = 120):
    """sum_k p_k w^k with p_{k+1}/p_k = mult(k); stops at the smallest term."""
    total = 1 + 0j
    dsum = 0j  # d/dw of the sum
    p = 1 + 0j
    best = float("inf")
    for k in range(terms):
        p_next = p * mult(k) * w
        if abs(p_next) >= best or abs(p_next) < 1e-18 * abs(total):
            if abs(p_next) < best:
                total += p_next
                dsum += (k + 1) * p_next / w
            break
        best = abs(p_next)
        total += p_next
        dsum += (k + 1) * p_next / w
        p = p_next
    return total, dsum


def _asymptotic(a: complex, z: complex) -> tuple[complex, complex]:
    """Large-|z| expansion of D_a and its derivative."""
    w = 1 / (z * z)  # expansions are in powers of z^{-2}
    dw = -2 / (z ** 3)
    s1, ds1 = _asym_sum(lambda k: -(a - 2 * k) * (a - 2 * k - 1) / (2 * (k + 1)), w)
    lead = cmath.exp(a * cmath.log(z) - z * z / 4)
    val = lead * s1
    der = lead * ((a / z - z / 2) * s1 + ds1 * dw)
    theta = cmath.phase(z)
    if abs(theta) > math.pi / 2:
        sign = 1 if theta > 0 else -1
        s2, ds2 = _asym_sum(lambda k: (a + 2 * k + 1) * (a + 2 * k + 2) / (2 * (k + 1)), w)
        coef = -math.sqrt(2 * math.pi) * rgamma(-a) * cmath.exp(sign * 1j * math.pi * a)
        lead2 = coef * cmath.exp((-a - 1) * cmath.log(z) + z * z / 4)
        val += lead2 * s2
        der += lead2 * (((-a - 1) / z + z / 2) * s2 + ds2 * dw)
    return val, der


def _ray_integrate(a: complex, theta: float, r0: float, r1: float, g0: complex, dg0: complex):
    e = cmath.exp(1j * theta)

    def rhs(r, y):
        z = r * e
        return [e * y[1], e * (z * z / 4 - a - 0.5) * y[0]]

    sol = solve_ivp(rhs, (r0, r1), [complex(g0), complex(dg0)], method="DOP853",
                    rtol=1e-13, atol=1e-300)
    if not sol.success:
        raise ArithmeticError(f"Weber integration failed: {sol.message}")
    return complex(sol.y[0, -1]), complex(sol.y[1, -1])


def _arc_integrate(a: complex, r: float, th0: float, th1: float, g0: complex, dg0: complex):
    def rhs(th, y):
        z = r * cmath.exp(1j * th)
        dz = 1j * z
        return [dz * y[1], dz * (z * z / 4 - a - 0.5) * y[0]]

    sol = solve_ivp(rhs, (th0, th1), [complex(g0), complex(dg0)], method="DOP853",
                    rtol=1e-13, atol=1e-300)
    if not sol.success:
        raise ArithmeticError(f"Weber integration failed: {sol.message}")
    return complex(sol.y[0, -1]), complex(sol.y[1, -1])


def series_radius(a: complex) -> float:
    return min(SERIES_RADIUS, 4.0 / math.sqrt(abs(a))) if a != 0 else SERIES_RADIUS


def _stable_sector(a: complex, z: complex) -> tuple[complex, complex]:
    """D_a, D_a' where a single route is reliable: near the origin, far out, or |arg z|
    within pi/4 of the real axis."""
    r = abs(z)
    theta = cmath.phase(z)
    r_s = series_radius(a)
    if r <= r_s:
        g, dg, _ = _weber_series(a, z, *_origin_values(a))
        return g, dg
    if r >= ASYMPTOTIC_RADIUS:
        return _asymptotic(a, z)
    if abs(theta) <= math.pi / 4 + 1e-12:
        return _inward(a, theta, r, INWARD_START)
    return _outward(a, theta, r)


def _inward(a, theta, r, start):
    g0, dg0 = _asymptotic(a, start * cmath.exp(1j * theta))
    return _ray_integrate(a, theta, start, r, g0, dg0)


def _outward(a, theta, r):
    r_s = series_radius(a)
    g0, dg0, _ = _weber_series(a, r_s * cmath.exp(1j * theta), *_origin_values(a))
    return _ray_integrate(a, theta, r_s, r, g0, dg0)


def _arc(a, theta, r):
    # from the positive real axis round the circle |z| = r; D_a is recessive at the
    # start, so contamination by the dominant solution shrinks until |arg z| = pi/2
    g0, dg0 = _stable_sector(a, complex(r))
    return _arc_integrate(a, r, 0.0, theta, g0, dg0)


def _connection(a, z):
    # D_a(z) = Gamma(a+1)/sqrt(2 pi) [e^{i pi a/2} D_{-a-1}(iz) + e^{-i pi a/2} D_{-a-1}(-iz)]
    b = -a - 1
    pref = complex_gamma(a + 1) / math.sqrt(2 * math.pi)
    gp, dgp = _stable_sector(b, 1j * z)
    gm, dgm = _stable_sector(b, -1j * z)
    ep, em = cmath.exp(0.5j * math.pi * a), cmath.exp(-0.5j * math.pi * a)
    return pref * (ep * gp + em * gm), pref * 1j * (ep * dgp - em * dgm)


def _reflection(a, z):
    # D_a(z) = e^{-s i pi a} D_a(-z) + sqrt(2 pi)/Gamma(-a) e^{-s i pi (a+1)/2} D_{-a-1}(s i z),
    # s chosen so that s i z lands in the middle sector
    s = -1 if cmath.phase(z) > 0 else 1
    g1, dg1 = _stable_sector(a, -z)
    g2, dg2, _ = _middle_sector(-a - 1, s * 1j * z)
    e1 = cmath.exp(-s * 1j * math.pi * a)
    e2 = math.sqrt(2 * math.pi) * rgamma(-a) * cmath.exp(-s * 0.5j * math.pi * (a + 1))
    return e1 * g1 + e2 * g2, -e1 * dg1 + e2 * s * 1j * dg2


def _consensus(routes):
    cands = []
    for route in routes:
        try:
            g, dg = route()
        except (ArithmeticError, GammaPoleError, ZeroDivisionError):
            continue
        if cmath.isfinite(g) and cmath.isfinite(dg):
            cands.append((g, dg))
    best, spread = None, math.inf
    for i, ci in enumerate(cands):
        for cj in cands[i + 1:]:
            d = abs(ci[0] - cj[0]) / max(abs(ci[0]), 1e-300)
            if d < spread:
                best, spread = ci, d
    if best is None:
        raise ArithmeticError("no pair of evaluation routes produced finite values")
    return best[0], best[1], spread


def _middle_sector(a, z):
    """pi/4 < |arg z| < 3pi/4, r_s < |z| < 10.

    Every single route loses accuracy for some a here (ray integration runs against
    a dominant companion, the connection formula cancels near the negative real a
    axis), so several routes are evaluated and the closest-agreeing pair wins.
    Returns value, derivative and the relative spread of that pair.
    """
    r, theta = abs(z), cmath.phase(z)
    return _consensus((lambda: _connection(a, z), lambda: _outward(a, theta, r),
                       lambda: _arc(a, theta, r),
                       lambda: _inward(a, theta, r, ASYMPTOTIC_RADIUS),
                       lambda: _inward(a, theta, r, INWARD_START)))


def _outer_sector(a, z):
    """|arg z| >= 3pi/4, r_s < |z| < 10.

    Outward integration fails when D_a is recessive there (a near a non-negative
    integer); inward integration fails when it is not.  Same pairing rule as the
    middle sector.
    """
    r, theta = abs(z), cmath.phase(z)
    return _consensus((lambda: _outward(a, theta, r), lambda: _reflection(a, z),
                       lambda: _inward(a, theta, r, ASYMPTOTIC_RADIUS),
                       lambda: _inward(a, theta, r, INWARD_START)))


def parabolic_cylinder(a, zeta) -> PCFValue:
    """D_a(zeta) and D_a'(zeta) for |zeta| <= 50, |a| <= 10.

    ``flagged`` marks points on the 3pi/4 Stokes rays beyond |zeta| = 8 and points
    whose competing evaluation routes disagree by more than ``CONSENSUS_TOL``.
    """
    a = complex(a)
    z = complex(zeta)
    r = abs(z)
    if r > MAX_ABS_Z or abs(a) > MAX_ABS_A:
        raise PCFRangeError(f"(a, zeta) = ({a}, {z}) outside |a|<={MAX_ABS_A}, |zeta|<={MAX_ABS_Z}")
    theta = cmath.phase(z)
    flagged = r > 8 and abs(abs(theta) - 3 * math.pi / 4) < 1e-3
    r_s = series_radius(a)
    if r <= r_s:
        g, dg, _ = _weber_series(a, z, *_origin_values(a))
        method = "series"
    elif r >= ASYMPTOTIC_RADIUS:
        g, dg = _asymptotic(a, z)
        method = "asymptotic"
    elif abs(theta) <= math.pi / 4:
        g, dg = _inward(a, theta, r, INWARD_START)
        method = "ode-inward"
    else:
        sector = _outer_sector if abs(theta) >= 3 * math.pi / 4 else _middle_sector
        g, dg, spread = sector(a, z)
        flagged = flagged or spread > CONSENSUS_TOL
        method = "consensus"
    if not (cmath.isfinite(g) and cmath.isfinite(dg)):
        raise OverflowError(f"D_{a}({z}) is not representable in double precision")
    return PCFValue(a, z, g, dg, method, flagged)


def pcf(a, zeta) -> complex:
    return parabolic_cylinder(a, zeta).value


def weber_residual(a, zeta) -> float:
    """|g'' + (a + 1/2 - zeta^2/4) g| with g'' assembled from D_a, D_{a-1}, D_{a-2}.

    Uses g'' = (zeta^2/4 - 1/2) D_a - a zeta D_{a-1} + a (a-1) D_{a-2}, which
    follows from the derivative recurrence applied twice.
    """
    a = complex(a)
    z = complex(zeta)
    d0 = pcf(a, z)
    d1 = pcf(a - 1, z)
    d2 = pcf(a - 2, z)
    g2 = (z * z / 4 - 0.5) * d0 - a * z * d1 + a * (a - 1) * d2
    return abs(g2 + (a + 0.5 - z * z / 4) * d0)


def recurrence_residual(a, zeta) -> float:
    """|D_a'(z) + (z/2) D_a(z) - a D_{a-1}(z)| with D_a' from the evaluator itself."""
    p = parabolic_cylinder(a, zeta)
    return abs(p.derivative + 0.5 * p.zeta * p.value - p.a * pcf(p.a - 1, p.zeta))


def connection_rhs(a, zeta) -> complex:
    """Gamma(a+1)/sqrt(2 pi) [e^{i pi a/2} D_{-a-1}(i z) + e^{-i pi a/2} D_{-a-1}(-i z)]."""
    a = complex(a)
    z = complex(zeta)
    c = complex_gamma(a + 1) / math.sqrt(2 * math.pi)
    return c * (cmath.exp(0.5j * math.pi * a) * pcf(-a - 1, 1j * z)
                + cmath.exp(-0.5j * math.pi * a) * pcf(-a - 1, -1j * z))


# --------------------------------------------------------------------------
# model-problem coefficients

class BetaConsistencyError(ValueError):
    pass


@dataclass(frozen=True)
class BetaPair:
    beta12: np.ndarray  # 4-component column
    beta21: np.ndarray  # 4-component row
    nu: float

    @property
    def product(self) -> complex:
        return complex(self.beta21 @ self.beta12)

    @property
    def closure_residual(self) -> float:
        return abs(self.product + self.nu)


def beta_coefficients(gamma_minus: np.ndarray, gamma_plus: np.ndarray, nu: float,
                      tol: float = 1e-6) -> BetaPair:
    """Coefficients of the off-diagonal residue of the local model problem.

    beta21 = nu Gamma(-i nu) e^{-pi nu/2} e^{i pi/4} / sqrt(2 pi) * gamma(-lam0)
    beta12 = -nu Gamma(i nu) e^{-pi nu/2} e^{-i pi/4} / sqrt(2 pi) * sigma1 gamma(lam0)^T

    so that beta12 = -beta21^dagger and beta21 beta12 = -nu for data obeying
    gamma(-lam) = conj(gamma(lam)) sigma1.
    """
    gm = np.asarray(gamma_minus, dtype=complex).reshape(4)
    gp = np.asarray(gamma_plus, dtype=complex).reshape(4)
    nm, npl = np.linalg.norm(gm), np.linalg.norm(gp)
    if abs(nm - npl) > tol * max(1.0, npl):
        raise BetaConsistencyError(f"|gamma(-lam0)| = {nm:.3e} differs from |gamma(lam0)| = {npl:.3e}")
    if nu == 0 or npl == 0:
        return BetaPair(np.zeros(4, complex), np.zeros(4, complex), float(nu))
    damp = math.exp(-math.pi * nu / 2) / math.sqrt(2 * math.pi)
    c21 = nu * complex_gamma(-1j * nu) * damp * cmath.exp(0.25j * math.pi)
    c12 = -nu * complex_gamma(1j * nu) * damp * cmath.exp(-0.25j * math.pi)
    return BetaPair(c12 * (SIGMA1 @ gp), c21 * gm, float(nu))


def delta_a(chi_at_minus_lam0: complex, tau: float, nu: float) -> complex:
    """e^{chi(-lam0) - 8 i tau} (192 tau)^{-i nu / 2}."""
    return cmath.exp(chi_at_minus_lam0 - 8j * tau) * cmath.exp(-0.5j * nu * math.log(192 * tau))


def model_m1_12(beta: BetaPair, delta: complex) -> np.ndarray:
    """i delta_A^2 beta12: the (1,2) block of the 1/lam coefficient of the local solution."""
    return 1j * delta ** 2 * beta.beta12
