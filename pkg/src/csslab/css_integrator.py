"""Pseudospectral integrating-factor RK4 solver for the coupled Sasa-Satsuma system

    u_t + u_xxx + 6 (|u|^2 + |v|^2) u_x + 3 u (|u|^2 + |v|^2)_x = 0

(and the same for v) on a periodic grid.  The dispersive term is integrated
exactly in Fourier space (u_hat -> e^{i k^3 t} u_hat); RK4 acts on the
interaction-picture variable.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .core_model import FieldPair, Grid1D

log = logging.getLogger(__name__)

DEFAULT_C_STAB = 2.5


class InstabilityError(FloatingPointError):
    def __init__(self, msg, last_good_time):
        super().__init__(msg)
        self.last_good_time = last_good_time


def stability_bound(grid: Grid1D, c_stab: float = DEFAULT_C_STAB) -> float:
    return c_stab / grid.k_max ** 3


@dataclass
class EvolutionConfig:
    dt: float
    t_end: float
    dealias: bool = True
    record_times: list = field(default_factory=list)
    c_stab: float = DEFAULT_C_STAB

    def __post_init__(self):
        if self.dt == 0:
            raise ValueError("dt must be nonzero")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        self.record_times = sorted(float(t) for t in self.record_times)
        if any(t < 0 or t > self.t_end + abs(self.dt) / 2 for t in self.record_times):
            raise ValueError("record_times must lie in [0, t_end]")

    def validate_for(self, grid: Grid1D):
        bound = stability_bound(grid, self.c_stab)
        if abs(self.dt) > bound:
            raise ValueError(
                f"|dt|={abs(self.dt):g} exceeds the stability bound {bound:.3g} "
                f"(c_stab={self.c_stab}, k_max={grid.k_max:.3g})")


def odd_wavenumbers(grid: Grid1D) -> np.ndarray:
    """Wavenumbers for odd-order derivatives: the Nyquist mode is zeroed so that
    real fields stay real."""
    k = grid.k.copy()
    k[grid.n // 2] = 0.0
    return k


class Spectral:
    """Per-grid FFT helpers (wavenumbers, dealiasing mask, linear propagators)."""

    def __init__(self, grid: Grid1D, dealias: bool = True):
        self.grid = grid
        self.k = odd_wavenumbers(grid)
        self.ik = 1j * self.k
        self.mask = (np.abs(self.k) <= (2.0 / 3.0) * grid.k_max) if dealias else None
        self._prop_cache: dict = {}

    def propagator(self, tau: float) -> np.ndarray:
        p = self._prop_cache.get(tau)
        if p is None:
            p = np.exp(1j * self.k ** 3 * tau)
            self._prop_cache[tau] = p
        return p

    def nonlinear_hat(self, w_hat: np.ndarray) -> np.ndarray:
        """Fourier transform of N(u, v) for the stacked spectra ``w_hat`` (shape (2, n))."""
        both = sfft.ifft(np.concatenate([w_hat, self.ik * w_hat]), axis=-1)
        f, fx = both[:2], both[2:]
        rho = np.sum(np.abs(f) ** 2, axis=0)
        rho_x = 2 * np.sum((np.conj(f) * fx).real, axis=0)
        out = sfft.fft(-6 * rho * fx - 3 * f * rho_x, axis=-1)
        if self.mask is not None:
            out *= self.mask
        return out


def nonlinear_rhs(fp: FieldPair, dealias: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """N(u, v) = -6 rho u_x - 3 u rho_x (and likewise for v), rho = |u|^2 + |v|^2."""
    sp = Spectral(fp.grid, dealias)
    n_hat = sp.nonlinear_hat(sfft.fft(np.stack([fp.u, fp.v]), axis=-1))
    n = sfft.ifft(n_hat, axis=-1)
    return n[0], n[1]


def spectral_derivative(f: np.ndarray, grid: Grid1D) -> np.ndarray:
    return sfft.ifft(1j * odd_wavenumbers(grid) * sfft.fft(f))


def _rk4_if(sp: Spectral, w_hat: np.ndarray, dt: float) -> np.ndarray:
    e_half = sp.propagator(dt / 2)
    e_full = sp.propagator(dt)
    nl = sp.nonlinear_hat
    k1 = nl(w_hat)
    half = e_half * w_hat
    k2 = nl(half + 0.5 * dt * e_half * k1)
    k3 = nl(half + 0.5 * dt * k2)
    k4 = nl(e_full * w_hat + dt * e_half * k3)
    return e_full * w_hat + (dt / 6) * (e_full * k1 + 2 * e_half * (k2 + k3) + k4)


def _to_field(fp: FieldPair, w_hat: np.ndarray, t: float) -> FieldPair:
    u, v = sfft.ifft(w_hat, axis=-1)
    return fp.with_fields(u, v, t)


def step(fp: FieldPair, dt: float, dealias: bool = True, _sp: Spectral | None = None) -> FieldPair:
    """One integrating-factor RK4 step; exact for the linear flow."""
    sp = _sp or Spectral(fp.grid, dealias)
    w = _rk4_if(sp, sfft.fft(np.stack([fp.u, fp.v]), axis=-1), dt)
    if not np.all(np.isfinite(w)):
        raise InstabilityError(f"non-finite state after step from t={fp.t}", fp.t)
    return _to_field(fp, w, fp.t + dt)


def linear_propagate(fp: FieldPair, t: float) -> FieldPair:
    """Closed-form solution of u_t + u_xxx = 0 after time ``t``."""
    e = np.exp(1j * odd_wavenumbers(fp.grid) ** 3 * t)
    return fp.with_fields(sfft.ifft(e * sfft.fft(fp.u)), sfft.ifft(e * sfft.fft(fp.v)), fp.t + t)


@dataclass
class ConservedMonitor:
    """Mass trace sampled every step."""

    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)

    def record(self, t: float, m: float):
        self.times.append(float(t))
        self.mass.append(float(m))

    @property
    def mass_drift(self) -> np.ndarray:
        m = np.asarray(self.mass)
        if len(m) == 0:
            return m
        m0 = m[0]
        return (m - m0) / m0 if m0 > 0 else np.zeros_like(m)

    @property
    def max_abs_drift(self) -> float:
        d = self.mass_drift
        return float(np.max(np.abs(d))) if len(d) else 0.0


@dataclass
class Trajectory:
    snapshots: list  # list[FieldPair] at record times (t attribute = simulation time)
    monitor: ConservedMonitor
    record_times: list

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


def _mass_hat(w_hat: np.ndarray, h: float, n: int) -> float:
    # Parseval: h * sum |f|^2 = (h / n) * sum |f_hat|^2
    return float(h / n * np.sum(np.abs(w_hat) ** 2))


def evolve(fp0: FieldPair, cfg: EvolutionConfig, check_stability: bool = True,
           progress=None) -> Trajectory:
    """March from ``fp0.t`` to ``fp0.t + t_end`` (or backwards for dt < 0).

    Snapshots are taken at the step nearest each record time; record times are
    magnitudes, so a backward run records states at t = -record_time.
    """
    grid = fp0.grid
    if check_stability:
        cfg.validate_for(grid)
    sp = Spectral(grid, cfg.dealias)
    sign = 1.0 if cfg.dt > 0 else -1.0
    dt = cfg.dt
    nsteps = int(round(cfg.t_end / abs(dt)))
    rec_steps = {}
    for t_rec in cfg.record_times:
        rec_steps.setdefault(int(round(t_rec / abs(dt))), []).append(t_rec)
    w = sfft.fft(np.stack([fp0.u, fp0.v]), axis=-1)
    mon = ConservedMonitor()
    mon.record(fp0.t, _mass_hat(w, grid.h, grid.n))
    snaps, times = [], []
    for t_rec in rec_steps.get(0, []):
        snaps.append(fp0)
        times.append(t_rec)
    t0 = fp0.t
    for i in range(1, nsteps + 1):
        w_new = _rk4_if(sp, w, dt)
        if not np.all(np.isfinite(w_new)):
            raise InstabilityError(
                f"non-finite state at step {i}; last good t={t0 + sign * (i - 1) * abs(dt):g}",
                t0 + (i - 1) * dt)
        w = w_new
        t = t0 + i * dt
        mon.record(t, _mass_hat(w, grid.h, grid.n))
        if i in rec_steps:
            snap = _to_field(fp0, w, t)
            for t_rec in rec_steps[i]:
                snaps.append(snap)
                times.append(t_rec)
        if progress is not None and i % 1000 == 0:
            progress(i, nsteps)
    return Trajectory(snaps, mon, times)
