"""Reflection constraints tying v to u, and their deviation along PDE runs."""
from __future__ import annotations

import enum

import numpy as np

from .core_model import DEFAULT_BOUNDARY_TOL, FieldPair, Grid1D


class ReductionKind(str, enum.Enum):
    REVERSE_TIME = "reverse_time"                # v(x, t) = conj u(-x, t)
    REVERSE_SPACE_TIME = "reverse_space_time"    # v(x, t) = conj u(-x, -t)


class MissingBackwardRunError(ValueError):
    pass


def reflect(f: np.ndarray) -> np.ndarray:
    """f(-x) on a symmetric periodic grid: index map j -> (n - j) mod n."""
    f = np.asarray(f)
    return np.roll(f[::-1], 1, axis=-1)


def _require_symmetric(grid: Grid1D):
    if not grid.is_symmetric(atol=grid.h * 1e-6):
        raise ValueError(f"grid [{grid.x_min}, {grid.x_max}) is not symmetric about 0")


def constrain_initial_data(grid: Grid1D, u0, kind: ReductionKind | str = ReductionKind.REVERSE_TIME,
                           boundary_tol: float = DEFAULT_BOUNDARY_TOL) -> FieldPair:
    """(u0, conj u0(-x)); both kinds coincide at t = 0."""
    ReductionKind(kind)
    _require_symmetric(grid)
    u0 = np.asarray(u0, dtype=complex)
    return FieldPair(grid, u0, np.conj(reflect(u0)), 0.0, boundary_tol)


def pointwise_deviation(v: np.ndarray, u_partner: np.ndarray) -> float:
    """sup_x |v(x) - conj(u_partner(-x))|."""
    return float(np.max(np.abs(np.asarray(v) - np.conj(reflect(u_partner)))))


def constraint_deviation(snapshots, kind: ReductionKind | str, backward=None) -> float:
    """Largest sup-norm violation of the constraint over the recorded states.

    ``snapshots`` (and ``backward`` for the space-time kind) are sequences of
    FieldPair; the backward run must record the same times with dt < 0.
    """
    kind = ReductionKind(kind)
    snapshots = list(snapshots)
    if not snapshots:
        return 0.0
    _require_symmetric(snapshots[0].grid)
    if kind is ReductionKind.REVERSE_TIME:
        return max(pointwise_deviation(s.v, s.u) for s in snapshots)
    if backward is None:
        raise MissingBackwardRunError("reverse_space_time needs the backward trajectory")
    backward = list(backward)
    if len(backward) != len(snapshots):
        raise ValueError("forward and backward runs record different numbers of states")
    out = 0.0
    for fwd, bwd in zip(snapshots, backward):
        if abs(fwd.t + bwd.t) > 1e-9 * max(1.0, abs(fwd.t)):
            raise ValueError(f"backward state at t={bwd.t} does not pair with t={fwd.t}")
        out = max(out, pointwise_deviation(fwd.v, bwd.u))
    return out
