"""Experiment configuration, pipelines and output writers behind the CLI."""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
import math
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .asymptotics import leading_order
from .core_model import DEFAULT_BOUNDARY_TOL, FieldPair, Grid1D, field_from_spec, write_field_csv
from .css_integrator import DEFAULT_C_STAB, EvolutionConfig, Trajectory, evolve, stability_bound
from .lax_scattering import ScatteringTable, build_table, detect_discrete_spectrum
from .nonlocal_reductions import ReductionKind, constrain_initial_data, constraint_deviation

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration (CLI exit code 2)."""


class DomainTooSmallError(RuntimeError):
    pass


class SolitonDataError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# configuration

@dataclass
class GridSpec:
    x_min: float = -60.0
    x_max: float = 60.0
    n: int = 1024

    def build(self) -> Grid1D:
        return Grid1D(float(self.x_min), float(self.x_max), int(self.n))


@dataclass
class FieldSpec:
    u: dict = field(default_factory=lambda: {"profile": "sech", "amplitude": 0.3})
    v: dict = field(default_factory=lambda: {"profile": "zero"})
    boundary_tol: float = DEFAULT_BOUNDARY_TOL


@dataclass
class ScatteringSpec:
    lambda_max: float = 2.0
    m: int = 64
    refine: int = 1
    grid: GridSpec | None = None    # defaults to the top-level grid
    rectangle: list = field(default_factory=lambda: [-3.0, 3.0, 0.02, 3.0])
    per_side: int = 32


@dataclass
class EvolutionSpec:
    dt: float = 1e-4
    t_end: float = 200.0
    record_times: list = field(default_factory=list)
    dealias: bool = True
    c_stab: float = DEFAULT_C_STAB
    grid: GridSpec | None = None    # defaults to the top-level grid


@dataclass
class ComparisonSpec:
    lambda0: list = field(default_factory=lambda: [0.5])
    times: list = field(default_factory=lambda: [50.0, 100.0, 200.0])
    edge_tol: float = 1e-8
    interior_fraction: float = 0.1


@dataclass
class ReductionSpec:
    kind: str = "reverse_time"
    t_end: float = 5.0
    dt: float = 1e-4
    record_times: list = field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0, 5.0])
    tol: float = 1e-6
    c_stab: float = DEFAULT_C_STAB
    constrain: bool = True


_field = field  # ExperimentConfig has an attribute named 'field'

_SECTIONS = {
    "grid": GridSpec, "field": FieldSpec, "scattering": ScatteringSpec,
    "evolution": EvolutionSpec, "comparison": ComparisonSpec, "reduction": ReductionSpec,
}


@dataclass
class ExperimentConfig:
    grid: GridSpec = _field(default_factory=GridSpec)
    field: FieldSpec = _field(default_factory=FieldSpec)
    scattering: ScatteringSpec = _field(default_factory=ScatteringSpec)
    evolution: EvolutionSpec = _field(default_factory=EvolutionSpec)
    comparison: ComparisonSpec = _field(default_factory=ComparisonSpec)
    reduction: ReductionSpec = _field(default_factory=ReductionSpec)
    output_dir: str = "out"
    seed: int = 0

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, data: dict | None) -> "ExperimentConfig":
        data = dict(data or {})
        unknown = set(data) - set(_SECTIONS) - {"output_dir", "seed"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for name, typ in _SECTIONS.items():
            sec = data.get(name) or {}
            if not isinstance(sec, dict):
                raise ConfigError(f"section {name!r} must be a mapping")
            kw[name] = _build_section(typ, name, sec)
        if "output_dir" in data:
            kw["output_dir"] = str(data["output_dir"])
        if "seed" in data:
            kw["seed"] = int(data["seed"])
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config must be a mapping at top level")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_yaml(text)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    # -- derived objects ---------------------------------------------------
    def scattering_grid(self) -> Grid1D:
        return (self.scattering.grid or self.grid).build()

    def evolution_grid(self) -> Grid1D:
        return (self.evolution.grid or self.grid).build()

    def initial_field(self, grid: Grid1D) -> FieldPair:
        return field_from_spec(grid, copy.deepcopy(self.field.u), copy.deepcopy(self.field.v),
                               self.field.boundary_tol)

    def evolution_config(self, record_times=None) -> EvolutionConfig:
        ev = self.evolution
        rec = ev.record_times if record_times is None else record_times
        return EvolutionConfig(float(ev.dt), float(ev.t_end), bool(ev.dealias),
                               list(rec), float(ev.c_stab))

    def validate(self):
        ev, cmp_, sc = self.evolution, self.comparison, self.scattering
        try:
            for spec in (self.grid, sc.grid, ev.grid):
                if spec is not None:
                    spec.build()
            if ev.dt == 0 or ev.t_end <= 0:
                raise ConfigError("evolution.dt must be nonzero and t_end positive")
            if sc.lambda_max <= 0 or sc.m < 8 or sc.m % 2:
                raise ConfigError("scattering.lambda_max must be positive and m even >= 8")
            bound = stability_bound(self.evolution_grid(), ev.c_stab)
            if abs(ev.dt) > bound:
                raise ConfigError(f"evolution.dt={ev.dt:g} exceeds the stability bound {bound:.3g}")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        late = [t for t in list(ev.record_times) + list(cmp_.times) if t > ev.t_end]
        if late:
            raise ConfigError(f"times {late} exceed evolution.t_end={ev.t_end}")
        lam_hi = sc.lambda_max * (1 - 0.5 / sc.m)
        bad = [l for l in cmp_.lambda0 if not 0 < l <= lam_hi]
        if bad:
            raise ConfigError(f"ray lambda0 {bad} outside the scattering table range (0, {lam_hi:g}]")
        try:
            ReductionKind(self.reduction.kind)
        except ValueError as exc:
            raise ConfigError(f"unknown reduction kind {self.reduction.kind!r}") from exc
        if any(t > self.reduction.t_end for t in self.reduction.record_times):
            raise ConfigError("reduction.record_times exceed reduction.t_end")


def _build_section(typ, name, sec):
    allowed = set(typ.__dataclass_fields__)
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {sorted(unknown)}")
    sec = dict(sec)
    if "grid" in sec and sec["grid"] is not None:
        sec["grid"] = _build_section(GridSpec, f"{name}.grid", sec["grid"])
    try:
        return typ(**sec)
    except TypeError as exc:
        raise ConfigError(f"bad section {name}: {exc}") from exc


def _plain(obj):
    """Recursively convert numpy scalars/tuples into plain JSON/YAML types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# --------------------------------------------------------------------------
# pipelines

def run_scatter(cfg: ExperimentConfig) -> ScatteringTable:
    fp = cfg.initial_field(cfg.scattering_grid())
    return build_table(fp, cfg.scattering.lambda_max, cfg.scattering.m, cfg.scattering.refine)


def run_evolve(cfg: ExperimentConfig, record_times=None) -> Trajectory:
    fp = cfg.initial_field(cfg.evolution_grid())
    return evolve(fp, cfg.evolution_config(record_times))


def sample_linear(fp: FieldPair, x: float) -> tuple[complex, complex]:
    """u, v at ``x`` by linear interpolation between the two nearest samples."""
    xs = fp.grid.x
    j = int(np.clip(np.floor((x - xs[0]) / fp.grid.h), 0, fp.grid.n - 2))
    w = (x - xs[j]) / fp.grid.h
    return (complex((1 - w) * fp.u[j] + w * fp.u[j + 1]),
            complex((1 - w) * fp.v[j] + w * fp.v[j + 1]))


def decay_exponent(times, amplitudes) -> float | None:
    """Least-squares slope of log|amplitude| against log t; None with fewer than 3 usable points."""
    t = np.asarray(times, dtype=float)
    a = np.asarray(amplitudes, dtype=float)
    ok = (t > 0) & (a > 0)
    if ok.sum() < 3:
        return None
    return float(np.polyfit(np.log(t[ok]), np.log(a[ok]), 1)[0])


def _rel(num: float, ref: float) -> float | None:
    return abs(num - ref) / ref if ref > 0 else None


@dataclass
class ComparisonRow:
    lambda0: float
    t: float
    x: float
    u_num: complex
    u_pred: complex
    v_num: complex
    v_pred: complex
    u_amp_rel_error: float | None
    v_amp_rel_error: float | None
    u_scaled: float          # sqrt(t) |u_num|
    v_scaled: float
    u_phase_diff: float | None = None
    v_phase_diff: float | None = None
    phi: float = 0.0
    nu: float = 0.0
    edge_amplitude: float = 0.0

    CSV_FIELDS = (
        "lambda0", "t", "x", "nu", "phi",
        "abs_u_num", "abs_u_pred", "u_amp_rel_error", "u_scaled", "u_phase_diff",
        "abs_v_num", "abs_v_pred", "v_amp_rel_error", "v_scaled", "v_phase_diff",
        "edge_amplitude",
    )

    def csv_row(self) -> list:
        vals = {
            "lambda0": self.lambda0, "t": self.t, "x": self.x, "nu": self.nu, "phi": self.phi,
            "abs_u_num": abs(self.u_num), "abs_u_pred": abs(self.u_pred),
            "u_amp_rel_error": self.u_amp_rel_error, "u_scaled": self.u_scaled,
            "u_phase_diff": self.u_phase_diff,
            "abs_v_num": abs(self.v_num), "abs_v_pred": abs(self.v_pred),
            "v_amp_rel_error": self.v_amp_rel_error, "v_scaled": self.v_scaled,
            "v_phase_diff": self.v_phase_diff, "edge_amplitude": self.edge_amplitude,
        }
        return [_fmt(vals[k]) for k in self.CSV_FIELDS]


@dataclass
class ComparisonReport:
    rows: list = field(default_factory=list)
    decay_exponents: dict = field(default_factory=dict)      # lambda0 -> {"u": .., "v": ..}
    winding: int | None = None
    tainted: bool = False
    mass_drift: float = 0.0
    symmetry: dict = field(default_factory=dict)
    config_hash: str = ""

    def rows_for(self, lambda0: float) -> list:
        return [r for r in self.rows if r.lambda0 == lambda0]

    def to_dict(self) -> dict:
        rows = []
        for r in self.rows:
            d = dict(zip(ComparisonRow.CSV_FIELDS, (r.csv_row())))
            for k in ("u_num", "u_pred", "v_num", "v_pred"):
                z = getattr(r, k)
                d[k] = [float(z.real), float(z.imag)]
            rows.append(d)
        return {
            "rows": rows,
            "decay_exponents": {repr(float(k)): v for k, v in self.decay_exponents.items()},
            "winding": self.winding,
            "tainted": self.tainted,
            "mass_drift": float(self.mass_drift),
            "symmetry": self.symmetry,
            "config_hash": self.config_hash,
        }


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _unwrap_phases(values: list) -> list:
    """Unwrap along t, skipping entries that are None."""
    idx = [i for i, v in enumerate(values) if v is not None]
    out = [None] * len(values)
    if idx:
        unwrapped = np.unwrap([values[i] for i in idx])
        for i, u in zip(idx, unwrapped):
            out[i] = float(u)
    return out


def run_compare(cfg: ExperimentConfig, allow_solitons: bool = False) -> tuple[ComparisonReport, ScatteringTable, Trajectory]:
    """Scatter the initial data, evolve the PDE and compare along the configured rays."""
    sc, cmp_ = cfg.scattering, cfg.comparison
    fp_s = cfg.initial_field(cfg.scattering_grid())
    table = build_table(fp_s, sc.lambda_max, sc.m, sc.refine)
    report = ComparisonReport(config_hash=cfg.config_hash(), symmetry=table.report.as_dict())
    trivial = not (np.any(fp_s.u) or np.any(fp_s.v))
    report.winding = 0 if trivial else detect_discrete_spectrum(fp_s, sc.rectangle, sc.per_side)
    if report.winding != 0:
        if not allow_solitons:
            raise SolitonDataError(
                f"winding {report.winding} on {sc.rectangle}: data carries discrete spectrum")
        report.tainted = True

    grid = cfg.evolution_grid()
    times = sorted(float(t) for t in cmp_.times)
    margin = cmp_.interior_fraction * grid.length
    for lam0 in cmp_.lambda0:
        for t in times:
            x = -12 * lam0 ** 2 * t
            if not (grid.x_min + margin <= x <= grid.x_max - margin):
                raise DomainTooSmallError(
                    f"ray point x={x:g} (lambda0={lam0}, t={t}) lies within "
                    f"{cmp_.interior_fraction:.0%} of an edge of [{grid.x_min}, {grid.x_max}]")

    traj = run_evolve(cfg, record_times=times)
    report.mass_drift = traj.monitor.max_abs_drift
    by_t = dict(zip(traj.record_times, traj.snapshots))
    for snap in traj.snapshots:
        if snap.edge_amplitude > cmp_.edge_tol:
            raise DomainTooSmallError(
                f"edge amplitude {snap.edge_amplitude:.2e} > {cmp_.edge_tol:g} at t={snap.t:g}; "
                "enlarge the domain")

    for lam0 in sorted(float(l) for l in cmp_.lambda0):
        rows = []
        for t in times:
            snap = by_t[t]
            x = -12 * lam0 ** 2 * t
            u_num, v_num = sample_linear(snap, x)
            ev = leading_order(x, t, table)
            u_pred, v_pred = ev.u_pred, ev.v_pred
            rows.append(ComparisonRow(
                lambda0=lam0, t=t, x=x, u_num=u_num, u_pred=u_pred, v_num=v_num, v_pred=v_pred,
                u_amp_rel_error=_rel(math.sqrt(t) * abs(u_num), abs(ev.u_as)),
                v_amp_rel_error=_rel(math.sqrt(t) * abs(v_num), abs(ev.v_as)),
                u_scaled=math.sqrt(t) * abs(u_num), v_scaled=math.sqrt(t) * abs(v_num),
                u_phase_diff=_phase_diff(u_num, u_pred), v_phase_diff=_phase_diff(v_num, v_pred),
                phi=ev.phi, nu=ev.nu, edge_amplitude=snap.edge_amplitude,
            ))
        for key in ("u_phase_diff", "v_phase_diff"):
            for r, val in zip(rows, _unwrap_phases([getattr(r, key) for r in rows])):
                setattr(r, key, val)
        if len(times) >= 3:
            report.decay_exponents[lam0] = {
                "u": decay_exponent(times, [abs(r.u_num) for r in rows]),
                "v": decay_exponent(times, [abs(r.v_num) for r in rows]),
            }
        report.rows.extend(rows)
    return report, table, traj


def _phase_diff(num: complex, pred: complex) -> float | None:
    if num == 0 or pred == 0:
        return None
    return float(np.angle(num / pred))


def run_reduce_check(cfg: ExperimentConfig) -> dict:
    red = cfg.reduction
    kind = ReductionKind(red.kind)
    grid = cfg.evolution_grid()
    base = cfg.initial_field(grid)
    fp = constrain_initial_data(grid, base.u, kind, base.boundary_tol) if red.constrain else base
    ecfg = EvolutionConfig(abs(red.dt), red.t_end, cfg.evolution.dealias, red.record_times, red.c_stab)
    fwd = evolve(fp, ecfg)
    bwd = None
    if kind is ReductionKind.REVERSE_SPACE_TIME:
        bcfg = EvolutionConfig(-abs(red.dt), red.t_end, cfg.evolution.dealias, red.record_times, red.c_stab)
        bwd = evolve(fp, bcfg).snapshots
    dev = constraint_deviation(fwd.snapshots, kind, bwd)
    return {"kind": kind.value, "max_deviation": dev, "pass": bool(dev < red.tol)}


# --------------------------------------------------------------------------
# outputs

def meta_record(cfg: ExperimentConfig, command: str) -> dict:
    return {
        "command": command,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "versions": {
            "csslab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def _write_json(path: Path, obj):
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit_outputs(obj, path, cfg: ExperimentConfig | None = None, command: str = "") -> list[Path]:
    """Write ``obj`` (report, table, trajectory or dict) under directory ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if isinstance(obj, ComparisonReport):
        _write_csv(out / "comparison.csv", ComparisonRow.CSV_FIELDS, [r.csv_row() for r in obj.rows])
        _write_json(out / "comparison.json", obj.to_dict())
        written += [out / "comparison.csv", out / "comparison.json"]
    elif isinstance(obj, ScatteringTable):
        header = ["lambda"] + [f"{p}_gamma{k}" for k in range(1, 5) for p in ("re", "im")] \
            + ["det_s_error", "unitarity_error"]
        rows = []
        for j, lam in enumerate(obj.lambdas):
            g = obj.gammas[j]
            row = [repr(float(lam))]
            for c in g:
                row += [repr(float(c.real)), repr(float(c.imag))]
            if obj.samples:
                s = obj.samples[j]
                row += [repr(float(s.det_s_error)), repr(float(s.unitarity_error))]
            else:
                row += ["", ""]
            rows.append(row)
        _write_csv(out / "scattering.csv", header, rows)
        _write_json(out / "symmetry.json", obj.report.as_dict())
        written += [out / "scattering.csv", out / "symmetry.json"]
    elif isinstance(obj, Trajectory):
        for j, (t_rec, snap) in enumerate(zip(obj.record_times, obj.snapshots)):
            p = out / f"snapshot_{j:03d}_t{t_rec:g}.csv"
            write_field_csv(p, snap)
            written.append(p)
        _write_csv(out / "monitor.csv", ["t", "mass", "mass_drift"],
                   [[repr(float(t)), repr(float(m)), repr(float(d))] for t, m, d in
                    zip(obj.monitor.times, obj.monitor.mass, obj.monitor.mass_drift)])
        written.append(out / "monitor.csv")
    elif isinstance(obj, dict):
        _write_json(out / f"{command or 'result'}.json", obj)
        written.append(out / f"{command or 'result'}.json")
    else:
        raise TypeError(f"cannot emit {type(obj).__name__}")
    if cfg is not None:
        _write_json(out / "meta.json", meta_record(cfg, command))
        (out / "config.yaml").write_text(cfg.to_yaml())
        written += [out / "meta.json", out / "config.yaml"]
    return written


def read_table_csv(path) -> ScatteringTable:
    """Reload a table written by :func:`emit_outputs`."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1, usecols=range(9))
    data = np.atleast_2d(data)
    gam = data[:, 1:9:2] + 1j * data[:, 2:9:2]
    return ScatteringTable(data[:, 0], gam)
