import logging
import math
import time
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from povm_coherence.blockcoh import (
    ALPHA_MEASURES,
    CLOSED_FORM_MEASURES,
    MEASURE_NAMES,
    MeasureParams,
    MeasureResult,
    block_measure,
)
from povm_coherence.decorators import measure_time
from povm_coherence.errors import MalformedInput, SolverFailure
from povm_coherence.file_management import (
    digest,
    measurement_payload,
    naimark_payload,
    state_payload,
)
from povm_coherence.naimark import build_extension
from povm_coherence.optim import SolverConfig
from povm_coherence.povmcoh import PovmMeasureRequest, evaluate
from povm_coherence.quantum import (
    DensityMatrix,
    Povm,
    ProjectiveMeasurement,
    random_density,
    random_povm,
    random_projective,
)
from povm_coherence.verification import (
    DEFAULT_DIM_MAX,
    DEFAULT_TRIALS,
    DEFAULT_WORKERS,
    SUITES,
    VerificationReport,
    run_suites,
)


logger = logging.getLogger(__name__)

DEFAULT_ROUTE = "direct"
DEFAULT_NAIMARK_CHECK_STATES = 10
REPORT_COLUMNS = ["measure", "alpha", "route", "value", "converged", "wall_time"]


def parse_measure_list(text: str) -> List[Tuple[str, float | None]]:
    """
    Parse "l1,tsallis:2,rel,renyi:0.5" into (name, alpha) pairs.

    Raises:
        MalformedInput: For unknown names, missing or extra orders, or
          orders that are not numbers.
    """
    items = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        name, _, order = token.partition(":")
        if name not in MEASURE_NAMES:
            raise MalformedInput(f"Unknown measure {name!r}")
        if name in ALPHA_MEASURES:
            try:
                alpha = float(order)
            except ValueError as error:
                raise MalformedInput(f"Measure {name!r} needs an order, e.g. {name}:0.5") from error
            items.append((name, alpha))
        else:
            if order:
                raise MalformedInput(f"Measure {name!r} takes no order")
            items.append((name, None))
    if not items:
        raise MalformedInput("No measures requested")
    return items


def _clean(value: Any) -> Any:
    """Replace non-finite floats by None so reports stay strict JSON."""
    if isinstance(value, dict):
        return {key: _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _entry(
    name: str, alpha: float | None, route: str, result: MeasureResult
) -> Dict[str, Any]:
    diagnostics = result.diagnostics
    entry = {
        "measure": name,
        "alpha": alpha,
        "route": route,
        "value": result.value,
        "converged": diagnostics.converged,
        "status": diagnostics.status,
        "iterations": diagnostics.iterations,
        "residuals": dict(diagnostics.residuals),
    }
    if diagnostics.boundary:
        entry["boundary"] = True
    return entry


def _failure_entry(
    name: str, alpha: float | None, route: str, error: SolverFailure
) -> Dict[str, Any]:
    outcome = error.outcome
    return {
        "measure": name,
        "alpha": alpha,
        "route": route,
        "value": None,
        "best_objective": None if outcome is None else outcome.objective,
        "converged": False,
        "status": "solver_failure",
        "error": str(error),
    }


def _evaluate_one(
    name: str,
    alpha: float | None,
    rho: DensityMatrix,
    measurement: ProjectiveMeasurement | Povm,
    route: str,
    params: MeasureParams,
) -> List[Dict[str, Any]]:
    local = MeasureParams(alpha=alpha, solver=params.solver, slack=params.slack)
    # Projective measurements on the direct route use the block pipeline
    if isinstance(measurement, ProjectiveMeasurement) and route == "direct":
        return [_entry(name, alpha, "block", block_measure(name, rho, measurement, local))]

    povm = (
        Povm.from_projective(measurement)
        if isinstance(measurement, ProjectiveMeasurement)
        else measurement
    )
    if name not in CLOSED_FORM_MEASURES and route != "embedded":
        logger.info("%s is evaluated through the embedding", name)
        route = "embedded"
    results = evaluate(PovmMeasureRequest(rho, povm, name, alpha, local, route))
    entries = [_entry(name, alpha, key, result) for key, result in results.items()]
    if len(results) == 2:
        entries.append(
            {
                "measure": name,
                "alpha": alpha,
                "route": "difference",
                "value": results["direct"].value - results["embedded"].value,
            }
        )
    return entries


@measure_time
def run_measure(
    rho: DensityMatrix,
    measurement: ProjectiveMeasurement | Povm,
    measures: Sequence[Tuple[str, float | None]],
    route: str = DEFAULT_ROUTE,
    params: MeasureParams = MeasureParams(),
    seed: int = 0,
    timings: bool = False,
) -> Dict[str, Any]:
    """
    Evaluate measures on a state and build the report.

    Parameters:
        rho (DensityMatrix): The state.
        measurement (ProjectiveMeasurement or Povm): Selects the block or
          the POVM pipeline.
        measures (Sequence[Tuple[str, float | None]]): (name, alpha) pairs.
        route (str, optional): "direct", "embedded" or "both".
        params (MeasureParams, optional): Solver settings and clamp slack.
        seed (int, optional): Recorded in the report.
        timings (bool, optional): Add per-measure wall times.

    Returns:
        Dict[str, Any]: The report. Without ``timings`` it depends only on
          the inputs and settings.

    A measure whose solver fails is reported with converged=False, the
    best objective reached (if any) and status "solver_failure"; the report
    then carries "solver_failure": true.
    """
    # Evaluate each measure; a solver failure is recorded, not raised
    kind = "projective" if isinstance(measurement, ProjectiveMeasurement) else "povm"
    results = []
    failed = False
    for name, alpha in measures:
        start = time.perf_counter()
        try:
            entries = _evaluate_one(name, alpha, rho, measurement, route, params)
        except SolverFailure as error:
            logger.error("%s failed: %s", name, error)
            failed = True
            entries = [_failure_entry(name, alpha, route, error)]
        elapsed = time.perf_counter() - start
        if timings:
            for entry in entries:
                entry["wall_time"] = elapsed
        results.extend(entries)

    # Assemble the report with input digests for provenance
    report = {
        "inputs": {
            "state_digest": digest(state_payload(rho)),
            "measurement_digest": digest(measurement_payload(measurement)),
            "measurement_type": kind,
        },
        "route": route,
        "seed": seed,
        "feas_tol": params.solver.feas_tol,
        "results": results,
    }
    if failed:
        report["solver_failure"] = True
    return _clean(report)


def report_table(report: Dict[str, Any]) -> str:
    """Plain aligned text, one row per measure and route."""
    frame = pd.DataFrame(report["results"])
    for column in REPORT_COLUMNS:
        if column not in frame.columns:
            frame[column] = None
    frame["value"] = frame["value"].map(lambda v: "" if v is None else repr(v))
    return frame[REPORT_COLUMNS].to_string(index=False)


@measure_time
def run_naimark(
    povm: Povm,
    completion: str = "standard",
    seed: int = 0,
    verify: bool = False,
) -> Dict[str, Any]:
    """
    Build the Naimark extension JSON payload, optionally with its
    invariant residuals on random states.
    """
    # Build the extension and, on request, check its invariants on random states
    extension = build_extension(povm, completion=completion, seed=seed)
    residuals = None
    if verify:
        rng = np.random.default_rng(seed)
        states = [
            random_density(povm.dim, seed=rng)
            for _ in range(DEFAULT_NAIMARK_CHECK_STATES)
        ]
        residuals = extension.residuals(states)
    return _clean(naimark_payload(extension, residuals))


def run_verify(
    suite: str = "all",
    trials: int = DEFAULT_TRIALS,
    dim_max: int = DEFAULT_DIM_MAX,
    seed: int = 0,
    workers: int = DEFAULT_WORKERS,
    fail_fast: bool = False,
    solver: SolverConfig = SolverConfig(),
) -> VerificationReport:
    # Run the selected suites with the command-line solver settings
    suites = SUITES if suite == "all" else (suite,)
    return run_suites(
        suites,
        trials=trials,
        dim_max=dim_max,
        seed=seed,
        workers=workers,
        fail_fast=fail_fast,
        params=MeasureParams(solver=solver),
    )


def run_random(
    kind: str,
    dim: int,
    seed: int = 0,
    rank: int | None = None,
    blocks: Sequence[int] | None = None,
    outcomes: int | None = None,
) -> Dict[str, Any]:
    """
    Draw a random instance and return its file payload.

    Raises:
        MalformedInput: For inconsistent arguments.
    """
    if dim < 1:
        raise MalformedInput("dim must be at least 1")
    # Validate the flags that apply to each kind, then draw the instance
    if kind == "state":
        if blocks is not None or outcomes is not None:
            raise MalformedInput("A state takes only --rank")
        if rank is not None and not 1 <= rank <= dim:
            raise MalformedInput(f"rank must lie in [1, {dim}]")
        return state_payload(random_density(dim, rank, seed=seed))
    if kind == "projective":
        if rank is not None or outcomes is not None:
            raise MalformedInput("A projective measurement takes only --blocks")
        block_dims = list(blocks) if blocks is not None else [1] * dim
        if sum(block_dims) != dim or min(block_dims) < 1:
            raise MalformedInput(f"Blocks {block_dims} do not partition {dim}")
        return measurement_payload(random_projective(dim, block_dims, seed=seed))
    if kind == "povm":
        if rank is not None or blocks is not None:
            raise MalformedInput("A POVM takes only --outcomes")
        n = dim if outcomes is None else outcomes
        if n < 1:
            raise MalformedInput("outcomes must be at least 1")
        return measurement_payload(random_povm(dim, n, seed=seed))
    raise MalformedInput(f"Unknown kind {kind!r}")
