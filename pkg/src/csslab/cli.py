"""Command line entry point: ``csslab <subcommand> --config cfg.yaml``.

Exit codes: 0 pass, 1 acceptance failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import acceptance
from .asymptotics import leading_order
from .harness import (
    ConfigError, DomainTooSmallError, ExperimentConfig, SolitonDataError, _write_csv,
    emit_outputs, read_table_csv, run_compare, run_evolve, run_reduce_check, run_scatter,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("csslab")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csslab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="YAML experiment config")
        sp.add_argument("--output-dir", help="overrides output_dir from the config")
        sp.add_argument("--seed", type=int, help="overrides seed from the config")

    common(sub.add_parser("scatter", help="reflection table and symmetry report"))
    common(sub.add_parser("evolve", help="PDE snapshots and mass monitor"))
    sp = sub.add_parser("asymptote", help="leading-order asymptotics on rays or points")
    common(sp)
    sp.add_argument("--table", help="scattering.csv from a previous 'scatter' run")
    sp.add_argument("--point", action="append", default=[], metavar="X,T",
                    help="evaluation point, written --point=X,T since X < 0; repeatable "
                         "(default: the configured rays)")
    sp = sub.add_parser("compare", help="PDE vs asymptotics along rays")
    common(sp)
    sp.add_argument("--allow-solitons", action="store_true",
                    help="proceed (tainted) when the data carries discrete spectrum")
    common(sub.add_parser("reduce-check", help="nonlocal constraint preservation"))
    sp = sub.add_parser("selfcheck", help="invariant suite with a pass/fail table")
    common(sp, config_required=False)
    sp.add_argument("--quick", action="store_true", help="skip the slower PDE checks")
    return p


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.output_dir:
        cfg.output_dir = args.output_dir
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _cmd_scatter(cfg, args) -> int:
    table = run_scatter(cfg)
    emit_outputs(table, cfg.output_dir, cfg, "scatter")
    checks = acceptance.assess_symmetry(table.report)
    _print_checks(checks)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def _cmd_evolve(cfg, args) -> int:
    traj = run_evolve(cfg)
    emit_outputs(traj, cfg.output_dir, cfg, "evolve")
    print(f"mass drift {traj.monitor.max_abs_drift:.3e} over {len(traj.monitor.times) - 1} steps")
    return EXIT_OK


ASYMPTOTE_FIELDS = ("x", "t", "lambda0", "nu", "phi", "re_u_as", "im_u_as", "re_v_as", "im_v_as",
                    "abs_u_pred", "abs_v_pred")


def _cmd_asymptote(cfg, args) -> int:
    table = read_table_csv(args.table) if args.table else run_scatter(cfg)
    if args.point:
        try:
            points = [tuple(float(s) for s in p.split(",")) for p in args.point]
        except ValueError as exc:
            raise ConfigError(f"bad --point: {exc}") from exc
        if any(len(p) != 2 for p in points):
            raise ConfigError("--point expects X,T")
    else:
        points = [(-12 * l ** 2 * t, t) for l in cfg.comparison.lambda0 for t in cfg.comparison.times]
    rows = []
    for x, t in points:
        ev = leading_order(x, t, table)
        rows.append([repr(float(v)) for v in (
            ev.x, ev.t, ev.lambda0, ev.nu, ev.phi, ev.u_as.real, ev.u_as.imag,
            ev.v_as.real, ev.v_as.imag, abs(ev.u_pred), abs(ev.v_pred))])
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "asymptote.csv", ASYMPTOTE_FIELDS, rows)
    emit_outputs({"points": len(rows)}, out, cfg, "asymptote")
    return EXIT_OK


def _cmd_compare(cfg, args) -> int:
    report, table, _ = run_compare(cfg, allow_solitons=args.allow_solitons)
    emit_outputs(report, cfg.output_dir, cfg, "compare")
    checks = acceptance.assess_comparison(report)
    _print_checks(checks)
    return EXIT_OK if all(c.passed for c in checks) and not report.tainted else EXIT_FAIL


def _cmd_reduce(cfg, args) -> int:
    res = run_reduce_check(cfg)
    print(json.dumps(res, sort_keys=True))
    emit_outputs(res, cfg.output_dir, cfg, "reduce-check")
    return EXIT_OK if res["pass"] else EXIT_FAIL


def _cmd_selfcheck(cfg, args) -> int:
    checks = acceptance.selfcheck(seed=cfg.seed, quick=args.quick)
    _print_checks(checks)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def _print_checks(checks):
    width = max((len(c.name) for c in checks), default=10)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}")


_COMMANDS = {
    "scatter": _cmd_scatter, "evolve": _cmd_evolve, "asymptote": _cmd_asymptote,
    "compare": _cmd_compare, "reduce-check": _cmd_reduce, "selfcheck": _cmd_selfcheck,
}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolitonDataError, DomainTooSmallError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
