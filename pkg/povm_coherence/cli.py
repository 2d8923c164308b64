"""
Command-line front end.

    povm-coherence measure --state S.json --measurement M.json --measures l1,tsallis:2
    povm-coherence naimark --povm M.json --out V.json [--verify]
    povm-coherence verify --suite block --trials 50 --dim-max 4 --seed 7
    povm-coherence random --kind povm --dim 2 --outcomes 3 --seed 1 --out M.json

Exit codes: 0 success, 1 property violation, 2 malformed input or arguments,
3 input violating a state or measurement invariant, 4 solver failure,
5 Naimark completion failure.
"""
import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Sequence

from povm_coherence.blockcoh import DEFAULT_SOLVER_CLAMP, MeasureParams
from povm_coherence.errors import (
    BadAlpha,
    CoherenceError,
    CompletionFailure,
    MalformedInput,
    NoConvergence,
    SolverFailure,
)
from povm_coherence.file_management import (
    dumps,
    read_measurement,
    read_state,
    save_data_to_csv,
    write_json,
)
from povm_coherence.main import (
    DEFAULT_ROUTE,
    parse_measure_list,
    report_table,
    run_measure,
    run_naimark,
    run_random,
    run_verify,
)
from povm_coherence.optim import DEFAULT_FEAS_TOL, SolverConfig
from povm_coherence.quantum import Povm, ProjectiveMeasurement
from povm_coherence.verification import DEFAULT_DIM_MAX, DEFAULT_TRIALS, SUITES


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_MALFORMED = 2
EXIT_INVALID = 3
EXIT_SOLVER = 4
EXIT_COMPLETION = 5
SEED_ENV = "COHERENCE_SEED"


def exit_code_for(error: Exception) -> int:
    """Map a library error to its exit code."""
    if isinstance(error, (MalformedInput, BadAlpha)):
        return EXIT_MALFORMED
    if isinstance(error, CompletionFailure):
        return EXIT_COMPLETION
    if isinstance(error, (SolverFailure, NoConvergence)):
        return EXIT_SOLVER
    if isinstance(error, CoherenceError):
        return EXIT_INVALID
    return EXIT_MALFORMED


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as error:
        raise MalformedInput(f"{SEED_ENV}={raw!r} is not an integer") from error


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"{text!r} is not a list of integers") from error


def cmd_measure(args: argparse.Namespace) -> int:
    """Compute measures on file-supplied inputs and print the report."""
    try:
        measures = parse_measure_list(args.measures)
        rho = read_state(args.state)
        measurement = read_measurement(args.measurement)
        tol = DEFAULT_FEAS_TOL if args.tol is None else args.tol
        if tol <= 0:
            raise MalformedInput("--tol must be positive")
        params = MeasureParams(
            solver=SolverConfig(feas_tol=tol, seed=args.seed),
            slack=None if args.tol is None else max(args.tol, DEFAULT_SOLVER_CLAMP),
        )
        report = run_measure(
            rho,
            measurement,
            measures,
            route=args.route,
            params=params,
            seed=args.seed,
            timings=args.timings or args.format == "table",
        )
    except CoherenceError as error:
        logger.error("%s: %s", type(error).__name__, error)
        return exit_code_for(error)

    if args.out:
        write_json(args.out, report)
    if args.format == "table":
        print(report_table(report))
    else:
        print(dumps(report))
    if report.get("solver_failure"):
        return EXIT_SOLVER
    return EXIT_OK


def cmd_naimark(args: argparse.Namespace) -> int:
    """Write the Naimark extension of a POVM file."""
    try:
        measurement = read_measurement(args.povm)
        povm = (
            Povm.from_projective(measurement)
            if isinstance(measurement, ProjectiveMeasurement)
            else measurement
        )
        payload = run_naimark(
            povm, completion=args.completion, seed=args.seed, verify=args.verify
        )
    except CoherenceError as error:
        logger.error("%s: %s", type(error).__name__, error)
        return exit_code_for(error)

    write_json(args.out, payload)
    if args.verify:
        print(dumps(payload["residuals"]))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Run property suites; exit 1 on any fatal violation."""
    if args.trials < 1 or args.dim_max < 2 or args.workers < 1:
        logger.error("--trials and --workers must be >= 1, --dim-max >= 2")
        return EXIT_MALFORMED
    report = run_verify(
        suite=args.suite,
        trials=args.trials,
        dim_max=args.dim_max,
        seed=args.seed,
        workers=args.workers,
        fail_fast=args.fail_fast,
    )
    summary = report.summary()
    print(summary.to_string(index=False))
    if args.summary_csv:
        target = Path(args.summary_csv)
        save_data_to_csv(summary, target.name, str(target.parent))
    if report.passed:
        return EXIT_OK
    for record in report.counterexamples():
        print(json.dumps(record, allow_nan=True))
    return EXIT_VIOLATION


def cmd_random(args: argparse.Namespace) -> int:
    """Write a random valid instance."""
    try:
        payload = run_random(
            args.kind,
            args.dim,
            seed=args.seed,
            rank=args.rank,
            blocks=args.blocks,
            outcomes=args.outcomes,
        )
    except (CoherenceError, ValueError) as error:
        logger.error("%s", error)
        return EXIT_MALFORMED
    write_json(args.out, payload)
    return EXIT_OK


def build_parser(seed: int = 0) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="povm-coherence",
        description="Block and POVM coherence measures.",
    )
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    measure = sub.add_parser("measure", help="Evaluate coherence measures")
    measure.add_argument("--state", required=True)
    measure.add_argument("--measurement", required=True)
    measure.add_argument(
        "--measures", required=True,
        help="Comma list: l1, tsallis:<a>, rel, trace, weight, renyi:<a>",
    )
    measure.add_argument(
        "--route", choices=("direct", "embedded", "both"), default=DEFAULT_ROUTE
    )
    measure.add_argument("--format", choices=("json", "table"), default="json")
    measure.add_argument("--tol", type=float, default=None)
    measure.add_argument("--seed", type=int, default=seed)
    measure.add_argument("--timings", action="store_true")
    measure.add_argument("--out", default=None)
    measure.set_defaults(handler=cmd_measure)

    naimark = sub.add_parser("naimark", help="Write a Naimark extension")
    naimark.add_argument("--povm", required=True)
    naimark.add_argument("--out", required=True)
    naimark.add_argument("--verify", action="store_true")
    naimark.add_argument(
        "--completion", choices=("standard", "random"), default="standard"
    )
    naimark.add_argument("--seed", type=int, default=seed)
    naimark.set_defaults(handler=cmd_naimark)

    verify = sub.add_parser("verify", help="Run randomized property suites")
    verify.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    verify.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    verify.add_argument("--dim-max", type=int, default=DEFAULT_DIM_MAX)
    verify.add_argument("--seed", type=int, default=seed)
    verify.add_argument("--workers", type=int, default=1)
    verify.add_argument("--fail-fast", action="store_true")
    verify.add_argument("--summary-csv", default=None)
    verify.set_defaults(handler=cmd_verify)

    random = sub.add_parser("random", help="Write a random instance")
    random.add_argument(
        "--kind", choices=("state", "projective", "povm"), required=True
    )
    random.add_argument("--dim", type=int, required=True)
    random.add_argument("--rank", type=int, default=None)
    random.add_argument("--blocks", type=_int_list, default=None)
    random.add_argument("--outcomes", type=int, default=None)
    random.add_argument("--seed", type=int, default=seed)
    random.add_argument("--out", required=True)
    random.set_defaults(handler=cmd_random)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        seed = default_seed()
    except MalformedInput as error:
        print(error, file=sys.stderr)
        return EXIT_MALFORMED
    parser = build_parser(seed)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
