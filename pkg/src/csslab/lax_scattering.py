"""Jost solutions, scattering matrix and reflection data of the 5x5 spectral problem.

The x-part of the Lax pair is integrated in the conjugated variable
``nu = e^{-i lam x sigma_hat} mu``, which obeys ``nu_x = A(x) nu`` with
``A = e^{-i lam x sigma} U e^{i lam x sigma}``.  A two-node Gauss (fourth order)
Magnus step is used: for real ``lam`` every step propagator is the exponential
of an anti-Hermitian, traceless matrix, so ``det mu = 1`` and the unitarity of
``s`` hold to roundoff.  Off-grid potential values come from band-limited
(Fourier) interpolation of the samples.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.interpolate import CubicSpline

from .core_model import SIGMA1, SIGMA_DIAG, BoundaryDecayWarning, FieldPair, frobenius_norm

GAUSS_OFFSETS = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)
SINGULAR_A_TOL = 1e-12


class SpectralSingularityError(ValueError):
    """a(lam) is numerically singular; the data is outside the solitonless, regular class."""


class ContourTooCloseError(ValueError):
    """The winding contour passes too close to a zero of the analytic determinant."""


class _NodeField:
    """Potential vector (u, ū, v, v̄) interpolated to the Gauss nodes of every substep."""

    def __init__(self, fp: FieldPair, refine: int = 1):
        if refine < 1:
            raise ValueError("refine must be >= 1")
        g = fp.grid
        self.fp = fp
        self.refine = refine
        self.step = g.h / refine
        fracs = np.array([(i + c) / refine for i in range(refine) for c in GAUSS_OFFSETS])
        shift = np.exp(1j * np.outer(fracs * g.h, g.k))  # (2r, n)
        uh = np.fft.fft(fp.u)
        vh = np.fft.fft(fp.v)
        u_n = np.fft.ifft(uh[None, :] * shift, axis=-1)
        v_n = np.fft.ifft(vh[None, :] * shift, axis=-1)
        # node positions in integration order: cell j, substep i, gauss c
        x = g.x[:, None] + (fracs * g.h)[None, :]
        self.x = x.reshape(-1, 2)  # (n*r, 2)
        u_n = u_n.T.reshape(-1, 2)
        v_n = v_n.T.reshape(-1, 2)
        self.q = np.stack([u_n, np.conj(u_n), v_n, np.conj(v_n)], axis=-1)  # (n*r, 2, 4)
        self.x_steps = g.x_min + self.step * np.arange(g.n * refine + 1)


def _conjugated_generators(nf: _NodeField, lam: float) -> np.ndarray:
    ph = np.exp(-2j * lam * nf.x)[..., None]
    top = ph * nf.q
    a = np.zeros(nf.x.shape + (5, 5), dtype=complex)
    a[..., :4, 4] = top
    a[..., 4, :4] = -np.conj(top)
    return a


def _magnus_exponents(gen: np.ndarray, h: float) -> np.ndarray:
    a1, a2 = gen[:, 0], gen[:, 1]
    comm = a2 @ a1 - a1 @ a2
    return 0.5 * h * (a1 + a2) + (np.sqrt(3) / 12) * h * h * comm


def _expm_antihermitian(omega: np.ndarray) -> np.ndarray:
    w, vecs = np.linalg.eigh(1j * omega)
    return (vecs * np.exp(-1j * w)[..., None, :]) @ np.conj(np.swapaxes(vecs, -1, -2))


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """mats[-1] @ ... @ mats[0] by pairwise reduction."""
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, np.eye(mats.shape[-1], dtype=complex)[None]])
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def _step_propagators(nf: _NodeField, lam: float) -> np.ndarray:
    omega = _magnus_exponents(_conjugated_generators(nf, lam), nf.step)
    return _expm_antihermitian(omega)


def _check_field(fp: FieldPair) -> bool:
    if not (np.all(np.isfinite(fp.u)) and np.all(np.isfinite(fp.v))):
        raise FloatingPointError("field contains non-finite samples")
    with warnings.catch_warnings():
        warnings.simplefilter("always", BoundaryDecayWarning)
        return fp.check_boundary()


@dataclass(frozen=True)
class JostSolution:
    """mu(x; lam) on the step nodes x_min, ..., x_max (shape (N+1, 5, 5))."""

    lam: float
    x: np.ndarray
    mu: np.ndarray
    from_minus_infinity: bool
    flagged: bool = False

    def at(self, j: int) -> np.ndarray:
        return self.mu[j]


def jost_solve(fp: FieldPair, lam: float, from_minus_infinity: bool = True,
               refine: int = 1) -> JostSolution:
    """Jost solution normalised to the identity at x_min (mu_-) or x_max (mu_+).

    ``refine`` substeps are taken per grid cell.
    """
    lam = float(lam)
    ok = _check_field(fp)
    nf = _NodeField(fp, refine)
    props = _step_propagators(nf, lam)
    nsteps = len(props)
    nu = np.empty((nsteps + 1, 5, 5), dtype=complex)
    if from_minus_infinity:
        nu[0] = np.eye(5)
        for j in range(nsteps):
            nu[j + 1] = props[j] @ nu[j]
    else:
        nu[-1] = np.eye(5)
        inv = np.conj(np.swapaxes(props, -1, -2))
        for j in range(nsteps - 1, -1, -1):
            nu[j] = inv[j] @ nu[j + 1]
    if not np.all(np.isfinite(nu)):
        raise FloatingPointError(f"non-finite Jost solution at lam={lam}")
    x = nf.x_steps
    ph = np.exp(1j * lam * x[:, None, None] * (SIGMA_DIAG[:, None] - SIGMA_DIAG[None, :]))
    return JostSolution(lam, x, ph * nu, from_minus_infinity, flagged=not ok)


def scattering_matrix(fp: FieldPair, lam: float, refine: int = 1, _nf: _NodeField | None = None) -> np.ndarray:
    """s(lam) = e^{-i lam x_max sigma_hat} mu_-(x_max; lam) for real ``lam`` (field at t = 0)."""
    if _nf is None:
        _check_field(fp)
        _nf = _NodeField(fp, refine)
    s = _ordered_product(_step_propagators(_nf, float(lam)))
    if not np.all(np.isfinite(s)):
        raise FloatingPointError(f"non-finite scattering matrix at lam={lam}")
    return s


@dataclass(frozen=True)
class SpectralSample:
    lam: float
    a: np.ndarray
    b: np.ndarray
    gamma: np.ndarray
    det_a: complex
    s: np.ndarray = field(repr=False)

    @property
    def det_s_error(self) -> float:
        return float(abs(np.linalg.det(self.s) - 1))

    @property
    def unitarity_error(self) -> float:
        return frobenius_norm(self.s.conj().T @ self.s - np.eye(5))


def sample_from_s(lam: float, s: np.ndarray) -> SpectralSample:
    a = s[:4, :4]
    b = s[4, :4]
    det_a = complex(np.linalg.det(a))
    if abs(det_a) < SINGULAR_A_TOL:
        raise SpectralSingularityError(
            f"|det a({lam})| = {abs(det_a):.2e} < {SINGULAR_A_TOL}: spectral singularity, "
            "exclude this data")
    gamma = np.linalg.solve(a.T, b)
    return SpectralSample(float(lam), a.copy(), b.copy(), gamma, det_a, s)


def reflection(fp: FieldPair, lam: float, refine: int = 1) -> SpectralSample:
    """Blocks a = s_11, b = s_21 and the reflection covector gamma = b a^{-1}."""
    return sample_from_s(lam, scattering_matrix(fp, lam, refine))


@dataclass(frozen=True)
class SymmetryReport:
    max_det_s_error: float = 0.0
    max_unitarity_error: float = 0.0
    max_a_symmetry_error: float = 0.0
    max_b_symmetry_error: float = 0.0
    max_reflection_symmetry_error: float = 0.0

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def symmetry_report(samples: list[SpectralSample]) -> SymmetryReport:
    """Checks det s = 1, s^dagger s = I and the lam -> -lam relations over a symmetric set."""
    by_lam = {round(s.lam, 12): s for s in samples}
    det_err = max((s.det_s_error for s in samples), default=0.0)
    uni_err = max((s.unitarity_error for s in samples), default=0.0)
    a_err = b_err = r_err = 0.0
    for s in samples:
        m = by_lam.get(round(-s.lam, 12))
        if m is None:
            continue
        a_err = max(a_err, frobenius_norm(s.a - SIGMA1 @ np.conj(m.a) @ SIGMA1))
        b_err = max(b_err, frobenius_norm(np.conj(m.b) @ SIGMA1 - s.b))
        g2 = np.sum(np.abs(s.gamma) ** 2)
        gm2 = np.sum(np.abs(m.gamma) ** 2)
        r_err = max(r_err, abs((1 + g2) - (1 + gm2)))
    return SymmetryReport(det_err, uni_err, a_err, b_err, r_err)


@dataclass
class ScatteringTable:
    """gamma(lam) sampled on a symmetric real grid, with cubic interpolation of Re/Im parts."""

    lambdas: np.ndarray
    gammas: np.ndarray
    samples: list = field(default_factory=list, repr=False)
    report: SymmetryReport = field(default_factory=SymmetryReport)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        self.gammas = np.asarray(self.gammas, dtype=complex).reshape(len(self.lambdas), 4)
        if np.any(np.diff(self.lambdas) <= 0):
            raise ValueError("lambdas must be strictly increasing")
        if not np.allclose(self.lambdas, -self.lambdas[::-1], rtol=0, atol=1e-12):
            raise ValueError("lambda grid must be symmetric about 0")
        if not np.all(np.isfinite(self.gammas)):
            raise ValueError("non-finite reflection data")
        self._re = CubicSpline(self.lambdas, self.gammas.real, axis=0)
        self._im = CubicSpline(self.lambdas, self.gammas.imag, axis=0)

    @classmethod
    def from_function(cls, gamma_fn, lambda_max: float, m: int, **meta) -> "ScatteringTable":
        lambdas = symmetric_lambda_grid(lambda_max, m)
        gam = np.array([np.asarray(gamma_fn(l), dtype=complex) for l in lambdas])
        return cls(lambdas, gam, meta=dict(meta))

    @property
    def lambda_range(self) -> tuple[float, float]:
        return float(self.lambdas[0]), float(self.lambdas[-1])

    def contains(self, lam) -> bool:
        lo, hi = self.lambda_range
        lam = np.asarray(lam)
        return bool(np.all((lam >= lo) & (lam <= hi)))

    def _check(self, lam):
        if not self.contains(lam):
            lo, hi = self.lambda_range
            raise ValueError(f"lambda {lam} outside table range [{lo:g}, {hi:g}]")

    def gamma(self, lam) -> np.ndarray:
        """Interpolated gamma; shape (..., 4)."""
        self._check(lam)
        return self._re(lam) + 1j * self._im(lam)

    def gamma_norm2(self, lam) -> np.ndarray:
        return np.sum(np.abs(self.gamma(lam)) ** 2, axis=-1)

    def gamma_norm2_derivative(self, lam) -> np.ndarray:
        self._check(lam)
        g = self._re(lam) + 1j * self._im(lam)
        dg = self._re(lam, 1) + 1j * self._im(lam, 1)
        return 2 * np.sum((np.conj(g) * dg).real, axis=-1)

    @property
    def sup_gamma(self) -> float:
        return float(np.sqrt(np.max(np.sum(np.abs(self.gammas) ** 2, axis=-1))))


def symmetric_lambda_grid(lambda_max: float, m: int) -> np.ndarray:
    """{±(k + 1/2) lambda_max / m : k = 0..m-1}, sorted; never contains 0."""
    if m < 8 or m % 2:
        raise ValueError(f"m={m} must be an even count >= 8")
    if not lambda_max > 0:
        raise ValueError("lambda_max must be positive")
    pos = (np.arange(m) + 0.5) * lambda_max / m
    return np.concatenate([-pos[::-1], pos])


def build_table(fp: FieldPair, lambda_max: float, m: int, refine: int = 1,
                workers: int | None = None) -> ScatteringTable:
    """Reflection data on the symmetric grid plus a SymmetryReport."""
    lambdas = symmetric_lambda_grid(lambda_max, m)
    _check_field(fp)
    nf = _NodeField(fp, refine)

    def one(lam):
        try:
            return sample_from_s(lam, scattering_matrix(fp, lam, _nf=nf))
        except (SpectralSingularityError, FloatingPointError) as exc:
            raise type(exc)(f"scattering failed at lambda={lam}: {exc}") from exc

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            samples = list(pool.map(one, lambdas))
    else:
        samples = [one(l) for l in lambdas]
    table = ScatteringTable(lambdas, np.array([s.gamma for s in samples]), samples,
                            symmetry_report(samples))
    table.meta.update(lambda_max=float(lambda_max), m=int(m), refine=int(refine))
    return table


# --------------------------------------------------------------------------
# discrete spectrum diagnostic

def upper_analytic_det(fp: FieldPair, lam: complex, refine: int = 1, _nf=None) -> complex:
    """Analytic continuation into Im lam > 0 of conj(det a(conj lam)), i.e. s_55(lam).

    With psi_x = i lam sigma psi + U psi the 4x4 block a(lam) continues into the
    lower half-plane; its zeros there mirror the zeros of this function in the
    upper half-plane, so the two zero counts agree.  Only the fifth column of
    mu_- is propagated (it is the column analytic for Im lam > 0).
    """
    lam = complex(lam)
    nf = _nf or _NodeField(fp, refine)
    gen = np.zeros(nf.x.shape + (5, 5), dtype=complex)
    gen[..., :4, 4] = nf.q
    gen[..., 4, :4] = -np.conj(nf.q)
    idx = np.arange(5)
    gen[..., idx, idx] += 1j * lam * SIGMA_DIAG
    omega = _magnus_exponents(gen, nf.step)
    props = scipy.linalg.expm(omega) * np.exp(1j * lam * nf.step)
    col = np.zeros(5, dtype=complex)
    col[4] = 1.0
    # propagate the column directly: cheaper and avoids the growing first four columns
    for p in props:
        col = p @ col
    return complex(col[4])


def rectangle_boundary(rect, per_side: int) -> np.ndarray:
    re0, re1, im0, im1 = rect
    t = np.linspace(0.0, 1.0, per_side, endpoint=False)
    corners = [complex(re0, im0), complex(re1, im0), complex(re1, im1), complex(re0, im1)]
    pts = [c0 + (c1 - c0) * t for c0, c1 in zip(corners, corners[1:] + corners[:1])]
    return np.concatenate(pts)


def detect_discrete_spectrum(fp: FieldPair, rectangle, per_side: int = 64,
                             min_abs: float = 1e-10, refine: int = 1,
                             max_refinements: int = 4) -> int:
    """Argument-principle zero count inside ``rectangle = (re_min, re_max, im_min, im_max)``.

    Returns the winding number of s_55 (see :func:`upper_analytic_det`) around the
    positively oriented boundary.  The boundary sampling is doubled until no phase
    increment exceeds pi/4.
    """
    re0, re1, im0, im1 = map(float, rectangle)
    if not (re1 > re0 and im1 > im0 and im0 > 0):
        raise ValueError(f"rectangle {rectangle} must be non-degenerate and lie in Im lam > 0")
    _check_field(fp)
    nf = _NodeField(fp, refine)
    for _ in range(max_refinements + 1):
        pts = rectangle_boundary((re0, re1, im0, im1), per_side)
        vals = np.array([upper_analytic_det(fp, p, _nf=nf) for p in pts])
        if np.min(np.abs(vals)) < min_abs:
            raise ContourTooCloseError(
                f"|det| = {np.min(np.abs(vals)):.2e} on the contour; adjust the rectangle")
        steps = np.angle(np.roll(vals, -1) / vals)
        if np.max(np.abs(steps)) < np.pi / 4:
            return int(np.rint(np.sum(steps) / (2 * np.pi)))
        per_side *= 2
    raise ContourTooCloseError("phase not resolved on the contour; adjust the rectangle")
