"""Grids, field containers and the small dense matrices shared by every module."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_BOUNDARY_TOL = 1e-10


class BoundaryDecayWarning(UserWarning):
    """Field does not vanish at the truncation edges to the requested tolerance."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [x_min, x_max) with ``n`` samples (right end excluded)."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError(f"x_max={self.x_max} must exceed x_min={self.x_min}")
        n = int(self.n)
        if n < 16 or n & (n - 1):
            raise ValueError(f"n={self.n} must be a power of two >= 16")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    @property
    def k_max(self) -> float:
        return np.pi * self.n / self.length

    def is_symmetric(self, atol: float | None = None) -> bool:
        """True when the sample set is closed under x -> -x, i.e. x_min = -x_max."""
        atol = 1e-9 * self.length if atol is None else atol
        return abs(self.x_min + self.x_max) <= atol


@dataclass(frozen=True)
class FieldPair:
    """Sampled complex envelopes (u, v) at time ``t``.

    Arrays are copied and made read-only, so instances behave as values.
    """

    grid: Grid1D
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0
    boundary_tol: float = DEFAULT_BOUNDARY_TOL
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("u", "v"):
            arr = np.array(getattr(self, name), dtype=complex)
            if arr.shape != (self.grid.n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({self.grid.n},)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def edge_amplitude(self) -> float:
        """max(|u|, |v|) over the outer 5% of samples at each boundary."""
        m = max(1, int(np.ceil(0.05 * self.grid.n)))
        edges = np.concatenate([self.u[:m], self.u[-m:], self.v[:m], self.v[-m:]])
        return float(np.max(np.abs(edges)))

    @property
    def decays_at_boundary(self) -> bool:
        return self.edge_amplitude <= self.boundary_tol

    def check_boundary(self) -> bool:
        """Warn (but do not fail) when the Schwartz-compatibility check is violated."""
        ok = self.decays_at_boundary
        if not ok:
            warnings.warn(
                f"edge amplitude {self.edge_amplitude:.3e} exceeds boundary_tol "
                f"{self.boundary_tol:.1e}",
                BoundaryDecayWarning,
                stacklevel=2,
            )
        return ok

    def with_fields(self, u, v, t=None) -> "FieldPair":
        return FieldPair(self.grid, u, v, self.t if t is None else t, self.boundary_tol)

    @property
    def mass(self) -> float:
        """Trapezoid (periodic) approximation of the integral of |u|^2 + |v|^2."""
        return float(self.grid.h * np.sum(np.abs(self.u) ** 2 + np.abs(self.v) ** 2))


# --------------------------------------------------------------------------
# small dense matrices

def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def frobenius_norm(a) -> float:
    """sqrt(tr(A^dagger A)), i.e. the square root of the summed squared moduli."""
    a = np.asarray(a, dtype=complex)
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def _perm(order) -> np.ndarray:
    p = np.zeros((len(order), len(order)), dtype=int)
    p[np.arange(len(order)), order] = 1
    return p


@dataclass(frozen=True)
class StructureConstants:
    """Constant matrices: sigma = diag(1,1,1,1,-1), sigma1 (4x4) and nabla (5x5) swaps."""

    sigma: np.ndarray = field(default_factory=lambda: np.diag([1, 1, 1, 1, -1]))
    sigma1: np.ndarray = field(default_factory=lambda: _perm([1, 0, 3, 2]))
    nabla: np.ndarray = field(default_factory=lambda: _perm([1, 0, 3, 2, 4]))


CONSTANTS = StructureConstants()
SIGMA = CONSTANTS.sigma
SIGMA1 = CONSTANTS.sigma1
NABLA = CONSTANTS.nabla
SIGMA_DIAG = np.array([1.0, 1.0, 1.0, 1.0, -1.0])


def sigma1_conjugate(a: np.ndarray) -> np.ndarray:
    """sigma1 A sigma1 for a 4x4 matrix (an involution)."""
    return SIGMA1 @ a @ SIGMA1


def potential_vector(u, v) -> np.ndarray:
    """Stack (u, conj u, v, conj v) along a new leading axis of length 4."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    return np.stack([u, np.conj(u), v, np.conj(v)])


def potential_matrices(u, v) -> np.ndarray:
    """Batch of 5x5 potentials, shape (..., 5, 5), one per sample of u and v."""
    col = np.moveaxis(potential_vector(u, v), 0, -1)
    out = np.zeros(col.shape[:-1] + (5, 5), dtype=complex)
    out[..., :4, 4] = col
    out[..., 4, :4] = -np.conj(col)
    return out


def assemble_potential(fp: FieldPair, j: int) -> np.ndarray:
    """5x5 potential U at sample ``j``: top-right (u, ū, v, v̄)^T, bottom-left its negative adjoint."""
    if not 0 <= j < fp.grid.n:
        raise IndexError(f"sample index {j} outside [0, {fp.grid.n})")
    return potential_matrices(fp.u[j], fp.v[j])


# --------------------------------------------------------------------------
# field initializers

def sech_profile(x, amplitude=1.0, width=1.0, center=0.0, carrier=0.0):
    """A sech(w (x - x0)) e^{i c x}."""
    x = np.asarray(x, dtype=float)
    arg = width * (x - center)
    with np.errstate(over="ignore"):
        env = 1.0 / np.cosh(arg)
    return amplitude * env * np.exp(1j * carrier * x)


def gaussian_profile(x, amplitude=1.0, width=1.0, center=0.0, carrier=0.0):
    """A exp(-w (x - x0)^2 + i c x)."""
    x = np.asarray(x, dtype=float)
    return amplitude * np.exp(-width * (x - center) ** 2 + 1j * carrier * x)


PROFILES = {
    "sech": sech_profile,
    "gaussian": gaussian_profile,
    "zero": lambda x, **_: np.zeros(np.shape(x), dtype=complex),
}


def make_profile(x, spec: dict | None) -> np.ndarray:
    """Evaluate a profile spec such as ``{"profile": "sech", "amplitude": 0.3}``."""
    spec = dict(spec or {"profile": "zero"})
    name = spec.pop("profile", "zero")
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)} or 'file'")
    return PROFILES[name](x, **spec)


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read ``x, Re u, Im u, Re v, Im v`` rows; a header line is skipped if present."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(c) for c in row[:5]])
            except ValueError:
                if rows:
                    raise
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 5:
        raise ValueError(f"{path}: expected 5 numeric columns")
    return data[:, 0], data[:, 1] + 1j * data[:, 2], data[:, 3] + 1j * data[:, 4]


def write_field_csv(path, fp: FieldPair) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re_u", "im_u", "re_v", "im_v"])
        for row in zip(fp.grid.x, fp.u.real, fp.u.imag, fp.v.real, fp.v.imag):
            w.writerow([repr(float(c)) for c in row])


def field_from_file(path, boundary_tol=DEFAULT_BOUNDARY_TOL) -> FieldPair:
    x, u, v = read_field_csv(path)
    h = x[1] - x[0]
    if not np.allclose(np.diff(x), h, rtol=1e-8, atol=0):
        raise ValueError(f"{path}: samples are not uniformly spaced")
    grid = Grid1D(float(x[0]), float(x[0] + h * len(x)), len(x))
    return FieldPair(grid, u, v, 0.0, boundary_tol)


def field_from_spec(grid: Grid1D, u_spec, v_spec=None, boundary_tol=DEFAULT_BOUNDARY_TOL) -> FieldPair:
    """Build a FieldPair from profile specs; a ``{"profile": "file", "path": ...}`` spec
    for ``u_spec`` loads both fields from disk (and the grid with them)."""
    if u_spec and u_spec.get("profile") == "file":
        return field_from_file(Path(u_spec["path"]), boundary_tol)
    x = grid.x
    return FieldPair(grid, make_profile(x, u_spec), make_profile(x, v_spec), 0.0, boundary_tol)
