"""
Block coherence measures with respect to a projective measurement.

Closed forms: l1 norm, Tsallis relative entropy, relative entropy.
Solver based: modified trace norm, coherence weight, sandwiched Renyi.
"""
from dataclasses import dataclass, field
import logging
from typing import Any, Callable, Dict

import numpy as np

from povm_coherence.errors import BadAlpha, NegativeMeasure
from povm_coherence.matcore import (
    entropy_term,
    hermitian_part,
    psd_power,
    trace_norm,
)
from povm_coherence.optim import (
    SolverConfig,
    SolverOutcome,
    renyi_maximize,
    renyi_objective as kernel_objective,
    trace_norm_min,
    weight_sdp,
)
from povm_coherence.quantum import (
    ProjectiveMeasurement,
    check_dim,
    dephase_operator,
    state_matrix,
)


logger = logging.getLogger(__name__)

DEFAULT_CLOSED_FORM_CLAMP = 1e-9
DEFAULT_SOLVER_CLAMP = 1e-6
DEFAULT_BOUNDARY_TOL = 1e-10
MEASURE_NAMES = ("l1", "tsallis", "rel", "trace", "weight", "renyi")
CLOSED_FORM_MEASURES = ("l1", "tsallis", "rel")
ALPHA_MEASURES = ("tsallis", "renyi")


@dataclass(frozen=True)
class MeasureParams:
    """
    Parameters of a measure evaluation.

    Attributes:
        alpha (float, optional): Order of the Tsallis or Renyi measure.
        solver (SolverConfig): Settings of the optimization backends.
        slack (float, optional): Clamping window for small negative values
          of solver-based measures; defaults to DEFAULT_SOLVER_CLAMP.
    """
    alpha: float | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    slack: float | None = None

    @property
    def solver_slack(self) -> float:
        return DEFAULT_SOLVER_CLAMP if self.slack is None else self.slack


@dataclass
class Diagnostics:
    iterations: int = 0
    residuals: Dict[str, float] = field(default_factory=dict)
    converged: bool = True
    boundary: bool = False
    status: str = "closed_form"


@dataclass
class MeasureResult:
    """
    Value of a coherence measure.

    Attributes:
        value (float): The non-negative measure value.
        certificate (Dict[str, Any], optional): Optimizer data, e.g. the
          optimal incoherent state "sigma", "lambda" or "s".
        diagnostics (Diagnostics): Solver iterations, residuals and flags.
    """
    value: float
    certificate: Dict[str, Any] | None = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


def check_tsallis_alpha(alpha: float) -> None:
    if alpha is None or not (0.0 < alpha < 1.0 or 1.0 < alpha <= 2.0):
        raise BadAlpha(f"Tsallis order {alpha} is outside (0,1) U (1,2]")


def check_renyi_alpha(alpha: float) -> None:
    if alpha is None or not 0.5 <= alpha < 1.0:
        raise BadAlpha(f"Renyi order {alpha} is outside [1/2, 1)")


def clamp(value: float, slack: float, upper: float | None = None) -> float:
    """
    Clamp small negative values to 0 (and overshoots of ``upper``).

    Raises:
        NegativeMeasure: If the value is below -slack.
    """
    if value < -slack:
        raise NegativeMeasure(f"Measure evaluated to {value:.3e}")
    value = max(value, 0.0)
    if upper is not None and value > upper:
        value = upper if value <= upper + slack else value
    return float(value)


def _operand(rho, p: ProjectiveMeasurement) -> np.ndarray:
    mat = np.asarray(state_matrix(rho), dtype=complex)
    check_dim(mat, p.dim, "state")
    return mat


def _solver_diagnostics(outcome: SolverOutcome, boundary: bool = False):
    return Diagnostics(
        iterations=outcome.iterations,
        residuals=dict(outcome.residuals),
        converged=outcome.converged,
        boundary=boundary,
        status=outcome.status,
    )


def c_l1_block(rho, p: ProjectiveMeasurement) -> MeasureResult:
    """l1 norm of block coherence, sum_{i != j} ||P_i rho P_j||_tr."""
    mat = _operand(rho, p)
    total = 0.0
    for i, first in enumerate(p.projectors):
        for j, second in enumerate(p.projectors):
            if i != j:
                total += trace_norm(first @ mat @ second)
    return MeasureResult(value=clamp(total, DEFAULT_CLOSED_FORM_CLAMP))


def _tsallis_blocks(mat: np.ndarray, p: ProjectiveMeasurement, alpha: float):
    powered = psd_power(mat, alpha)
    return [
        psd_power(hermitian_part(pr @ powered @ pr), 1.0 / alpha)
        for pr in p.projectors
    ]


def c_tsallis_block(rho, p: ProjectiveMeasurement, alpha: float) -> MeasureResult:
    """
    Tsallis relative entropy of block coherence,
    [sum_i tr((P_i rho^alpha P_i)^{1/alpha}) - 1] / (alpha - 1).

    The certificate holds the optimal block-incoherent state
    sigma* = sum_i (P_i rho^alpha P_i)^{1/alpha} / normalizer.

    Raises:
        BadAlpha: If alpha is outside (0,1) U (1,2].
    """
    check_tsallis_alpha(alpha)
    mat = _operand(rho, p)
    blocks = _tsallis_blocks(mat, p, alpha)
    normalizer = float(sum(np.trace(block).real for block in blocks))
    value = (normalizer - 1.0) / (alpha - 1.0)
    return MeasureResult(
        value=clamp(value, DEFAULT_CLOSED_FORM_CLAMP),
        certificate={
            "sigma": sum(blocks) / normalizer,
            "normalizer": normalizer,
        },
    )


def tsallis_optimal_state(rho, p: ProjectiveMeasurement, alpha: float) -> np.ndarray:
    """The block-incoherent state minimizing D_T,alpha(rho || sigma)."""
    return c_tsallis_block(rho, p, alpha).certificate["sigma"]


def tsallis_min_divergence(rho, p: ProjectiveMeasurement, alpha: float) -> float:
    """
    min over block-incoherent sigma of D_T,alpha(rho || sigma),
    {[sum_i tr((P_i rho^alpha P_i)^{1/alpha})]^alpha - 1} / (alpha - 1).
    """
    check_tsallis_alpha(alpha)
    blocks = _tsallis_blocks(_operand(rho, p), p, alpha)
    normalizer = float(sum(np.trace(block).real for block in blocks))
    return (normalizer ** alpha - 1.0) / (alpha - 1.0)


def c_rel_block(rho, p: ProjectiveMeasurement) -> MeasureResult:
    """
    Relative entropy of block coherence in bits,
    tr(rho log2 rho) - sum_i tr[(P_i rho P_i) log2(P_i rho P_i)].
    """
    mat = _operand(rho, p)
    value = entropy_term(mat) - sum(
        entropy_term(hermitian_part(pr @ mat @ pr)) for pr in p.projectors
    )
    return MeasureResult(value=clamp(value, DEFAULT_CLOSED_FORM_CLAMP))


def c_trace_block(
    rho, p: ProjectiveMeasurement, params: MeasureParams = MeasureParams()
) -> MeasureResult:
    """
    Modified trace norm of block coherence, min ||rho - lambda sigma||_tr
    over lambda >= 0 and block-incoherent sigma.

    The certificate carries lambda* = tr X* and sigma* = X* / lambda*; an
    optimum at lambda* ~ 0 is flagged as a boundary solution instead.

    Raises:
        SolverFailure: If the SDP backend fails.
    """
    outcome = trace_norm_min(_operand(rho, p), p, params.solver)
    scale = float(np.trace(outcome.optimizer).real)
    boundary = scale <= DEFAULT_BOUNDARY_TOL
    if boundary:
        logger.info("Trace-norm optimum at lambda %.3e, no sigma certificate", scale)
    certificate = {"lambda": scale}
    if not boundary:
        certificate["sigma"] = outcome.optimizer / scale
    return MeasureResult(
        value=clamp(outcome.objective, params.solver_slack),
        certificate=certificate,
        diagnostics=_solver_diagnostics(outcome, boundary),
    )


def c_weight_block(
    rho, p: ProjectiveMeasurement, params: MeasureParams = MeasureParams()
) -> MeasureResult:
    """
    Coherence weight: 1 - max{tr Y : 0 <= Y <= rho, Y block diagonal}.

    Raises:
        SolverFailure: If the SDP backend fails.
    """
    outcome = weight_sdp(_operand(rho, p), p, params.solver)
    kept = outcome.objective
    value = clamp(1.0 - kept, params.solver_slack, upper=1.0)
    certificate = {"s": value}
    if kept > DEFAULT_BOUNDARY_TOL:
        certificate["sigma"] = outcome.optimizer / kept
    return MeasureResult(
        value=value,
        certificate=certificate,
        diagnostics=_solver_diagnostics(outcome, kept <= DEFAULT_BOUNDARY_TOL),
    )


def renyi_kernel(rho, alpha: float) -> np.ndarray:
    """K = rho^{(1-alpha)/(2 alpha)}."""
    return psd_power(state_matrix(rho), (1.0 - alpha) / (2.0 * alpha))


def renyi_objective(rho, sigma, alpha: float) -> float:
    """tr[(K sigma K)^alpha] with K = rho^{(1-alpha)/(2 alpha)}."""
    kernel = renyi_kernel(rho, alpha)
    return kernel_objective(kernel, state_matrix(sigma), alpha, SolverConfig().eig_floor)


def c_renyi_block(
    rho,
    p: ProjectiveMeasurement,
    alpha: float,
    params: MeasureParams = MeasureParams(),
    kernel: np.ndarray | None = None,
) -> MeasureResult:
    """
    Sandwiched Renyi block coherence,
    1 - max_sigma {tr[(K sigma K)^alpha]}^{1/(1-alpha)}.

    Parameters:
        rho: The state.
        p (ProjectiveMeasurement): The measurement.
        alpha (float): Order in [1/2, 1).
        params (MeasureParams, optional): Solver settings.
        kernel (np.ndarray, optional): A precomputed K; defaults to
          rho^{(1-alpha)/(2 alpha)}.

    Raises:
        BadAlpha: If alpha is outside [1/2, 1).
        SolverFailure: If Frank-Wolfe breaks down numerically.
    """
    check_renyi_alpha(alpha)
    mat = _operand(rho, p)
    if kernel is None:
        kernel = renyi_kernel(mat, alpha)
    outcome = renyi_maximize(kernel, p, alpha, params.solver, start=mat)
    best = max(outcome.objective, 0.0)
    value = 1.0 - best ** (1.0 / (1.0 - alpha))
    return MeasureResult(
        value=clamp(value, params.solver_slack, upper=1.0),
        certificate={"sigma": outcome.optimizer, "objective": outcome.objective},
        diagnostics=_solver_diagnostics(outcome),
    )


def block_measure(
    name: str, rho, p: ProjectiveMeasurement, params: MeasureParams = MeasureParams()
) -> MeasureResult:
    """
    Evaluate a block measure by name: l1, tsallis, rel, trace, weight, renyi.

    Raises:
        ValueError: For an unknown measure name.
        BadAlpha: If an order-dependent measure lacks a legal alpha.
    """
    dispatch: Dict[str, Callable[[], MeasureResult]] = {
        "l1": lambda: c_l1_block(rho, p),
        "tsallis": lambda: c_tsallis_block(rho, p, params.alpha),
        "rel": lambda: c_rel_block(rho, p),
        "trace": lambda: c_trace_block(rho, p, params),
        "weight": lambda: c_weight_block(rho, p, params),
        "renyi": lambda: c_renyi_block(rho, p, params.alpha, params),
    }
    if name not in dispatch:
        raise ValueError(f"Unknown measure {name!r}")
    return dispatch[name]()


def dephased_operand(rho, p: ProjectiveMeasurement) -> np.ndarray:
    """Delta_P applied to the operand, kept as a raw matrix."""
    return dephase_operator(_operand(rho, p), p)
