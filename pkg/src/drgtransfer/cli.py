"""Command-line entry point.

Exit codes: 0 success, 1 verification or scenario failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from . import drg, hamiltonian, spectra
from .errors import TransferError
from .scenario import (
    SUMMARY_HEADER,
    ConfigError,
    ScenarioConfig,
    fmt,
    format_checks,
    run_scenario,
    summary_rows,
    verify,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON scenario file; flags override its fields")
    p.add_argument("--family", choices=["cycle", "hypercube", "crown", "custom"])
    p.add_argument("--param", type=_int_list, help="size parameter(s), e.g. 2 or 3,4,5")
    p.add_argument("--gamma", type=_float_list, help="decoherence rate(s), e.g. 0.1,0.2,0.3")
    p.add_argument(
        "--couplings",
        help="auto | preset:<name> | solver[:ladder|folded[:t0]] | explicit:J0,J1,...",
    )


def _config(args: argparse.Namespace, **extra) -> ScenarioConfig:
    doc: dict = {}
    if args.config:
        doc = ScenarioConfig.from_json(args.config).__dict__.copy()
    overrides = {
        "family": args.family,
        "params": tuple(args.param) if args.param else None,
        "gamma_list": tuple(args.gamma) if args.gamma else None,
        "couplings": args.couplings,
        **extra,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig(**doc)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _config(
        args,
        t_max=args.t_max,
        dt=args.dt,
        csv=args.csv,
        svg=args.svg,
        oracle=True if args.oracle else None,
        paper_normalization=True if args.paper_normalization else None,
        jobs=args.jobs,
    )
    results = run_scenario(cfg)
    print("\t".join(SUMMARY_HEADER))
    for row in summary_rows(results):
        print("\t".join(row))
    return EXIT_FAIL if any(r.error for r in results) else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    extra = {}
    if not args.gamma and not args.config:
        extra["gamma_list"] = (0.1,)
    cfg = _config(args, **extra)
    checks = verify(cfg)
    print(format_checks(checks))
    failed = [c for c in checks if not c.ok]
    if failed:
        print(f"{len(failed)} of {len(checks)} checks failed; first: {failed[0].name}")
        return EXIT_FAIL
    print(f"all {len(checks)} checks passed")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    jp = drg.family_jacobi(args.family, args.param)
    spec = spectra.spectrum(jp)
    if args.energies:
        target = hamiltonian.PstTarget(args.t0, "explicit", tuple(args.energies))
    else:
        strategy = args.strategy or hamiltonian.DEFAULT_STRATEGY[args.family]
        target = hamiltonian.PstTarget(args.t0, strategy)
    j = hamiltonian.solve_couplings(spec, target)
    j = np.where(np.abs(j) < 1e-14 * max(1.0, float(np.max(np.abs(j)))), 0.0, j)
    print(",".join(fmt(v) for v in j))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drgtransfer",
        description="State transfer over distance-regular spin networks with intrinsic decoherence.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="fidelity traces to CSV and SVG")
    _scenario_args(sim)
    sim.add_argument("--t-max", type=float)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--csv", metavar="DIR")
    sim.add_argument("--svg", metavar="DIR")
    sim.add_argument("--oracle", action="store_true", help="append full-space oracle deviation")
    sim.add_argument(
        "--paper-normalization",
        action="store_true",
        help="use unnormalised P_l in the fidelity (comparison only)",
    )
    sim.add_argument("--jobs", type=int)
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="run every oracle and property check")
    _scenario_args(ver)
    ver.set_defaults(func=cmd_verify)

    sol = sub.add_parser("solve-couplings", help="print couplings J_0..J_d for perfect transfer")
    sol.add_argument("--family", choices=["cycle", "hypercube", "crown"], required=True)
    sol.add_argument("--param", type=int, required=True)
    sol.add_argument("--strategy", choices=["ladder", "folded"])
    sol.add_argument("--t0", type=float, default=1.0)
    sol.add_argument("--energies", type=_float_list, help="explicit target energies")
    sol.set_defaults(func=cmd_solve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransferError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ValueError) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
