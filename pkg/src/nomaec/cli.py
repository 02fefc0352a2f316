"""Command-line front end: ``nomaec {ec,sweep,lemmas,crossover,figures}``.

Exit status: 0 success, 1 a lemma check failed, 2 usage error, 3 domain
error, 4 accuracy failure, 5 output could not be written.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis, sweep
from .capacity import PowerAllocation, Snr, all_ecs, combine
from .errors import AccuracyFailure, DomainError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_ACCURACY = 4
EXIT_IO = 5


def _negative(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v < 0:
        raise argparse.ArgumentTypeError(f"beta must be negative, got {text}")
    return v


def _fraction(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"p1 must lie in (0, 1), got {text}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta1", type=_negative, default=-1.0, help="weak-user normalized QoS exponent (< 0)")
    p.add_argument("--beta2", type=_negative, default=-1.0, help="strong-user normalized QoS exponent (< 0)")
    p.add_argument("--p1", type=_fraction, default=0.2, help="weak-user power coefficient; P2 = 1 - P1")


def _method(p, default="quadrature"):
    p.add_argument("--method", choices=("closed_form", "quadrature", "monte_carlo"), default=default)
    p.add_argument("--samples", type=int, default=10**6, help="Monte Carlo blocks per point")
    p.add_argument("--seed", type=_seed, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nomaec", description="Effective capacity of two-user uplink NOMA vs OMA")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ec", help="all ECs at one operating point")
    p.add_argument("--rho-db", type=float, default=10.0)
    _common(p)
    _method(p)
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("sweep", help="grid sweep to CSV")
    p.add_argument("--config", help="JSON or key=value file; flags override it")
    p.add_argument("--rho-db", help="grid: list a,b,c or range start:stop:step")
    p.add_argument("--beta1", help="grid of weak-user exponents")
    p.add_argument("--beta2", help="grid of strong-user exponents")
    p.add_argument("--p1", help="grid of weak-user power coefficients")
    p.add_argument("--method", choices=("closed_form", "quadrature", "monte_carlo"))
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", "-o", help=f"CSV path (default: ${sweep.OUTPUT_DIR_ENV}/sweep.csv)")

    p = sub.add_parser("lemmas", help="numerical checks of the asymptotic lemmas")
    _common(p)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("crossover", help="SNR where NOMA and OMA ECs cross")
    p.add_argument("--user", choices=("1", "2", "sum"), required=True)
    _common(p)
    p.add_argument("--bracket", type=float, nargs=2, default=(0.0, 40.0), metavar=("LOW_DB", "HIGH_DB"))
    p.add_argument("--tol-db", type=float, default=0.1)

    p = sub.add_parser("figures", help="write fig2.csv ... fig9.csv")
    p.add_argument("--outdir", help=f"output directory (default: ${sweep.OUTPUT_DIR_ENV} or ./figures)")
    p.add_argument("--rho-db", default="-20:50:2", help="SNR grid for the versus-rho figures")
    p.add_argument("--p1", type=_fraction, default=0.2)
    _method(p)
    p.add_argument("--workers", type=int, default=1)
    return parser


def _default_dir(fallback: str) -> Path:
    return Path(os.environ.get(sweep.OUTPUT_DIR_ENV, fallback))


def cmd_ec(args) -> int:
    pa = PowerAllocation(args.p1)
    snr = Snr.from_db(args.rho_db)
    ecs = all_ecs(snr, pa, args.beta1, args.beta2, args.method, args.samples, args.seed)
    ecs["v_n"] = combine(ecs["ec1_noma"], ecs["ec2_noma"])
    ecs["v_o"] = combine(ecs["ec1_oma"], ecs["ec2_oma"])
    for name, est in ecs.items():
        if est.note and name.startswith("ec"):
            print(f"notice: {name}: {est.note}", file=sys.stderr)
    if args.json:
        print(json.dumps({k: vars(e) for k, e in ecs.items()}, indent=2))
        return EXIT_OK
    print(f"rho = {args.rho_db:g} dB, P = ({pa.p1:g}, {pa.p2:g}), beta = ({args.beta1:g}, {args.beta2:g})")
    for name, est in ecs.items():
        extra = f" +/- {est.std_error:.3g} (N={est.samples})" if est.method == "monte_carlo" else ""
        print(f"{name:9s} {est.value:.10f} b/s/Hz  [{est.method}]{extra}")
    return EXIT_OK


def _sweep_config(args) -> sweep.SweepConfig:
    cfg = sweep.load_config_file(args.config) if args.config else {}
    flag_map = {"rho_db": "rho_db_grid", "beta1": "beta1_grid", "beta2": "beta2_grid", "p1": "p1_grid"}
    merged = {}
    for key, value in cfg.items():
        merged[flag_map.get(key, key)] = value
    for flag, field in flag_map.items():
        if getattr(args, flag) is not None:
            merged[field] = getattr(args, flag)
    for flag, field in (("method", "method"), ("samples", "mc_samples"), ("seed", "seed"),
                        ("workers", "workers"), ("output", "output_path")):
        if getattr(args, flag) is not None:
            merged[field] = getattr(args, flag)
    if "samples" in merged:
        merged["mc_samples"] = merged.pop("samples")
    if "output" in merged:
        merged["output_path"] = merged.pop("output")
    if "rho_db_grid" not in merged:
        raise _Usage("sweep needs an SNR grid (--rho-db or rho_db in --config)")
    for field in flag_map.values():
        if field in merged:
            merged[field] = sweep.parse_grid(merged[field])
            if not merged[field]:
                raise _Usage(f"{field} is empty")
    for field, typ in (("mc_samples", int), ("seed", int), ("workers", int)):
        if field in merged:
            merged[field] = typ(merged[field])
    merged.setdefault("output_path", str(_default_dir(".") / "sweep.csv"))
    unknown = set(merged) - set(sweep.SweepConfig.__dataclass_fields__)
    if unknown:
        raise _Usage(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        return sweep.SweepConfig(**merged)
    except DomainError as exc:
        raise _Usage(str(exc))


def cmd_sweep(args) -> int:
    config = _sweep_config(args)
    path, rows = sweep.write_sweep(config)
    failed = sum(r.status.startswith("accuracy_failure") for r in rows)
    print(f"wrote {len(rows)} rows to {path}" + (f" ({failed} with accuracy failures)" if failed else ""))
    return EXIT_OK


def cmd_lemmas(args) -> int:
    pa = PowerAllocation(args.p1)
    reports = analysis.check_all(pa, args.beta1, args.beta2)
    if args.json:
        print(json.dumps([r.as_dict() for r in reports], indent=2))
    else:
        print("\n\n".join(analysis.format_report(r) for r in reports))
    return EXIT_OK if all(r.overall for r in reports) else EXIT_CHECK_FAILED


def cmd_crossover(args) -> int:
    user = args.user if args.user == "sum" else int(args.user)
    pa = PowerAllocation(args.p1)
    res = analysis.find_crossover(user, pa, args.beta1, args.beta2, tuple(args.bracket), args.tol_db)
    label = "sum (V_N - V_O)" if user == "sum" else f"user {user}"
    lo, hi = args.bracket
    if not res.found:
        sign = "NOMA" if res.gap_low > 0 else "OMA"
        print(f"{label}: no crossover in [{lo:g}, {hi:g}] dB "
              f"(gap {res.gap_low:+.6f} at {lo:g} dB, {res.gap_high:+.6f} at {hi:g} dB); {sign} throughout")
        return EXIT_OK
    below = "NOMA" if res.gap_low > 0 else "OMA"
    above = "OMA" if below == "NOMA" else "NOMA"
    print(f"{label}: rho* = {res.rho_star_db:.2f} dB (bracket {res.bracket[0]:.3f}..{res.bracket[1]:.3f} dB, "
          f"gap at root {res.achieved_gap:+.2e})")
    print(f"rule: use {below} below {res.rho_star_db:.2f} dB, {above} above")
    return EXIT_OK


def cmd_figures(args) -> int:
    outdir = Path(args.outdir) if args.outdir else _default_dir("figures")
    grid = sweep.parse_grid(args.rho_db)
    if not grid:
        raise _Usage("empty --rho-db grid")
    paths = sweep.write_figures(outdir, rho_db_grid=grid, p1=args.p1, method=args.method,
                                samples=args.samples, seed=args.seed, workers=args.workers)
    for p in paths:
        print(p)
    return EXIT_OK


class _Usage(Exception):
    pass


COMMANDS = {"ec": cmd_ec, "sweep": cmd_sweep, "lemmas": cmd_lemmas, "crossover": cmd_crossover,
            "figures": cmd_figures}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"nomaec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AccuracyFailure as exc:
        print(f"nomaec: accuracy failure: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except DomainError as exc:
        print(f"nomaec: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"nomaec: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
