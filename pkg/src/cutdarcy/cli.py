"""Command line entry point: ``cutdarcy run ...``.

Exit codes: 0 on success, 2 on solver failure, 3 on geometry failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .assembly import (DEFAULT_PENALTY, FACE_MODES, IMPL_MODES, METHODS, NORMAL_SOURCES,
                       VARIANTS, IncompatibleData, SingularConfig, StabilizationConfig)
from .geometry import DegenerateCut
from .harness import EXAMPLES, ExperimentConfig, LevelFailure, format_csv, run_experiment
from .linalg import SingularMatrix, write_matrix_market
from .macro import OrphanSmallElement, build_macro_partition, dump_macro
from .mesh import EmptyActiveMesh, dump_mesh

EXIT_SOLVER = 2
EXIT_GEOMETRY = 3

SOLVER_ERRORS = (SingularMatrix, SingularConfig, IncompatibleData)
GEOMETRY_ERRORS = (DegenerateCut, EmptyActiveMesh, OrphanSmallElement)


def _nx_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cutdarcy",
                                     description="Unfitted mixed finite elements for Darcy flow")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a convergence experiment and write a CSV table")
    run.add_argument("--example", choices=EXAMPLES, default="1")
    run.add_argument("--C", type=float, default=100.0, help="pressure scale of example 1.2")
    run.add_argument("--nx", type=_nx_list, default=(10, 20, 40, 80),
                     help="comma separated cells per side, strictly increasing")
    run.add_argument("--method", choices=METHODS, default="lagrange")
    run.add_argument("--penalty", type=float, default=DEFAULT_PENALTY)
    run.add_argument("--stab", choices=VARIANTS, default="sc")
    run.add_argument("--impl", choices=IMPL_MODES, default="patch")
    run.add_argument("--faces", choices=FACE_MODES, default="all")
    run.add_argument("--bulk-normal", choices=NORMAL_SOURCES, default="levelset")
    run.add_argument("--mult-deg", type=int, choices=(0, 1), default=1)
    run.add_argument("--delta", type=float, default=0.3)
    run.add_argument("--tau", type=float, default=1.0)
    run.add_argument("--tau-b", type=float, default=1.0)
    run.add_argument("--tau-c", type=float, default=1.0)
    run.add_argument("--theta", type=float, default=0.3,
                     help="height of the boundary inside the top cell row (examples 2, mixed)")
    run.add_argument("--no-condest", action="store_true", help="skip the condition estimate")
    run.add_argument("--no-timing", action="store_true",
                     help="write nan runtimes so repeated runs give identical files")
    run.add_argument("--out", help="CSV path; the table goes to stdout when omitted")
    run.add_argument("--dump-mesh", action="store_true", help="write the active mesh per level")
    run.add_argument("--dump-system", action="store_true",
                     help="write matrix and right-hand side (Matrix Market) per level")
    run.add_argument("--dump-macro", action="store_true",
                     help="write the macroelement partition per level")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config(args) -> ExperimentConfig:
    stab = StabilizationConfig(tau=args.tau, tau_b=args.tau_b, tau_c=args.tau_c,
                               variant=args.stab, face_mode=args.faces, impl_mode=args.impl,
                               bulk_normal=args.bulk_normal, delta=args.delta)
    return ExperimentConfig(example=args.example, nx=args.nx, method=args.method,
                            penalty=args.penalty, multiplier_degree=args.mult_deg, stab=stab,
                            C=args.C, theta=args.theta, condest=not args.no_condest,
                            timing=not args.no_timing, out=args.out)


def _dump(args, levels) -> None:
    base = Path(args.out).with_suffix("") if args.out else Path("cutdarcy")
    for lv in levels:
        stem = f"{base}_nx{lv.row.nx}"
        if args.dump_mesh:
            dump_mesh(lv.mesh, f"{stem}_mesh.txt")
        if args.dump_system:
            system = lv.solution.system
            write_matrix_market(f"{stem}_matrix.mtx", system.matrix,
                                comment=f"{system.method} system, N={system.size}")
            write_matrix_market(f"{stem}_rhs.mtx", system.rhs[:, None])
        if args.dump_macro:
            macro = lv.macro or build_macro_partition(lv.mesh, args.delta)
            dump_macro(macro, f"{stem}_macro.csv")


def run(args, cfg: ExperimentConfig) -> int:
    dumping = args.dump_mesh or args.dump_system or args.dump_macro
    try:
        result = run_experiment(cfg, keep_levels=dumping)
    except LevelFailure as exc:
        cause = exc.__cause__
        print(f"cutdarcy: {exc}", file=sys.stderr)
        if isinstance(cause, GEOMETRY_ERRORS):
            return EXIT_GEOMETRY
        if isinstance(cause, SOLVER_ERRORS):
            return EXIT_SOLVER
        raise
    rows, levels = result if dumping else (result, [])
    if dumping:
        _dump(args, levels)
    if not args.out:
        sys.stdout.write(format_csv(cfg, rows))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except ValueError as exc:
        parser.error(str(exc))
    return run(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
