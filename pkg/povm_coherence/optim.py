"""
Convex solvers over block-diagonal operators.

All variables live in block coordinates: an operator X is represented by
its diagonal blocks in the basis returned by
``ProjectiveMeasurement.block_basis``, so block-diagonality holds exactly
rather than through a penalty. The weight and trace-norm problems are
linear SDPs handed to cvxpy; the sandwiched Renyi objective is a concave
function maximized by Frank-Wolfe.
"""
from dataclasses import dataclass, field
import logging
from typing import Dict, List, Sequence, Tuple

import cvxpy as cp
import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import minimize_scalar

from povm_coherence.decorators import measure_time
from povm_coherence.errors import BadAlpha, DimMismatch, SolverFailure
from povm_coherence.matcore import (
    DEFAULT_EIG_FLOOR,
    dagger,
    eigh,
    hermitian_part,
    min_eigenvalue,
    psd_power,
    trace_norm,
)
from povm_coherence.quantum import ProjectiveMeasurement


logger = logging.getLogger(__name__)

DEFAULT_FEAS_TOL = 1e-9
DEFAULT_GAP_TOL = 1e-7
DEFAULT_MAX_ITER = 10000
DEFAULT_START_MIXING = 1e-3
DEFAULT_LINE_SEARCH_TOL = 1e-12
DEFAULT_TRACE_TOL = 1e-9
DEFAULT_CERTIFICATE_TOL = 1e-6
DEFAULT_ASCENT_SLACK = 1e-14
DEFAULT_STALL_WINDOW = 10
DEFAULT_STALL_RATIO = 0.9
FW_STEPS = ("exact", "diminishing")
ACCEPTED_STATUSES = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)


@dataclass(frozen=True)
class SolverConfig:
    """
    Tolerances and limits shared by every solver.

    Attributes:
        feas_tol (float): Primal feasibility tolerance; returned optimizers
          satisfy their constraints within 10 * feas_tol.
        gap_tol (float): Frank-Wolfe duality gap at which to stop.
        max_iter (int): Iteration cap for Frank-Wolfe and the SDP backend.
        fw_step (str): "exact" line search or "diminishing" 2/(k+2) steps.
        eig_floor (float): Relative support threshold for matrix powers.
        seed (int): Seed for any randomized component.
        sdp_solver (str, optional): cvxpy solver name; Clarabel when
          installed, SCS otherwise.
        fixed_point (bool): Let the Renyi solver try multiplicative
          fixed-point steps before falling back to Frank-Wolfe steps.
    """
    feas_tol: float = DEFAULT_FEAS_TOL
    gap_tol: float = DEFAULT_GAP_TOL
    max_iter: int = DEFAULT_MAX_ITER
    fw_step: str = "exact"
    eig_floor: float = DEFAULT_EIG_FLOOR
    seed: int = 0
    sdp_solver: str | None = None
    fixed_point: bool = True

    def __post_init__(self):
        if self.feas_tol <= 0 or self.gap_tol <= 0 or self.eig_floor <= 0:
            raise ValueError("Solver tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.fw_step not in FW_STEPS:
            raise ValueError(f"fw_step must be one of {FW_STEPS}")


@dataclass
class SolverOutcome:
    """
    Result of one solver call.

    Attributes:
        objective (float): Objective value at ``optimizer``.
        optimizer (np.ndarray): The block-diagonal optimal operator (Y, X or
          sigma), in the original coordinates.
        converged (bool): Whether every stopping criterion was met.
        residuals (Dict[str, float]): Feasibility and stationarity norms.
        iterations (int): Iterations used.
        status (str): Backend status string.
        gap_history (List[float]): Frank-Wolfe gaps, one per iteration.
    """
    objective: float
    optimizer: np.ndarray
    converged: bool
    residuals: Dict[str, float]
    iterations: int
    status: str = ""
    gap_history: List[float] = field(default_factory=list)


class BlockCoordinates:
    """
    Change of basis that makes the blocks of a measurement contiguous.
    """

    def __init__(self, blocks: ProjectiveMeasurement):
        self.basis, self.slices = blocks.block_basis
        self.sizes = tuple(s.stop - s.start for s in self.slices)
        self.dim = blocks.dim

    def to_blocks(self, x: np.ndarray) -> np.ndarray:
        if x.shape != (self.dim, self.dim):
            raise DimMismatch(
                f"Expected a {self.dim}x{self.dim} operator, got {x.shape}"
            )
        return hermitian_part(dagger(self.basis) @ x @ self.basis)

    def from_blocks(self, parts: Sequence[np.ndarray]) -> np.ndarray:
        inner = block_diag(*parts)
        return hermitian_part(self.basis @ inner @ dagger(self.basis))

    def diagonal_blocks(self, xb: np.ndarray) -> List[np.ndarray]:
        return [xb[s, s] for s in self.slices]


def _assemble(variables: Sequence[cp.Variable], sizes: Sequence[int]):
    rows = []
    for i, var in enumerate(variables):
        row = []
        for j in range(len(variables)):
            row.append(var if i == j else np.zeros((sizes[i], sizes[j])))
        rows.append(row)
    return cp.bmat(rows)


def _solve(problem: cp.Problem, cfg: SolverConfig) -> Tuple[str, bool]:
    """
    Solve with the configured backend.

    Returns:
        Tuple[str, bool]: The cvxpy status and whether the result is
          certified: solved at the requested tolerances on the first
          attempt with status OPTIMAL.
    """
    solver = cfg.sdp_solver
    if solver is None:
        solver = cp.CLARABEL if cp.CLARABEL in cp.installed_solvers() else cp.SCS
    if solver == cp.CLARABEL:
        options = {
            "tol_feas": cfg.feas_tol,
            "tol_gap_abs": cfg.feas_tol,
            "tol_gap_rel": cfg.feas_tol,
            "max_iter": min(cfg.max_iter, 500),
        }
    elif solver == cp.SCS:
        options = {
            "eps_abs": cfg.feas_tol,
            "eps_rel": cfg.feas_tol,
            "max_iters": max(cfg.max_iter, 100000),
        }
    else:
        options = {}

    # A second attempt runs at the backend's own default tolerances; its
    # result is kept but never certified.
    for attempt, attempt_options in enumerate((options, {})):
        try:
            problem.solve(solver=solver, **attempt_options)
        except cp.error.SolverError as error:
            logger.warning("%s failed: %s", solver, error)
            continue
        if problem.status in ACCEPTED_STATUSES:
            certified = attempt == 0 and problem.status == cp.OPTIMAL
            if not certified:
                logger.warning(
                    "%s returned status %s on attempt %d",
                    solver, problem.status, attempt + 1,
                )
            return problem.status, certified
        logger.warning("%s returned status %s", solver, problem.status)
    raise SolverFailure(f"{solver} returned status {problem.status}")


def _psd_violation(mat: np.ndarray) -> float:
    return max(0.0, -min_eigenvalue(hermitian_part(mat)))


def _block_values(variables: Sequence[cp.Variable]) -> List[np.ndarray]:
    """Raw primal values, symmetrized but not projected."""
    values = []
    for var in variables:
        if var.value is None:
            raise SolverFailure("Solver returned no primal point")
        values.append(hermitian_part(np.asarray(var.value, dtype=complex)))
    return values


def _finish(
    name: str,
    objective: float,
    optimizer: np.ndarray,
    residuals: Dict[str, float],
    status: str,
    certified: bool,
    cfg: SolverConfig,
    problem: cp.Problem,
) -> SolverOutcome:
    """
    Package an SDP result.

    ``converged`` requires a certified backend status, every "_psd"
    residual within 10 * feas_tol and every other residual (complementary
    slackness, equality, objective gap) within DEFAULT_CERTIFICATE_TOL. A
    NaN residual counts as a failure.
    """
    failed = []
    for key, value in residuals.items():
        limit = 10 * cfg.feas_tol if key.endswith("_psd") else DEFAULT_CERTIFICATE_TOL
        if not value <= limit:
            failed.append(key)
    converged = certified and not failed
    iterations = 0
    if problem.solver_stats is not None and problem.solver_stats.num_iters:
        iterations = int(problem.solver_stats.num_iters)
    if failed:
        logger.warning(
            "%s: residuals above tolerance: %s",
            name,
            ", ".join(f"{key}={residuals[key]:.3e}" for key in failed),
        )
    return SolverOutcome(
        objective=objective,
        optimizer=optimizer,
        converged=converged,
        residuals=residuals,
        iterations=iterations,
        status=status,
    )


@measure_time
def weight_sdp(
    rho, blocks: ProjectiveMeasurement, cfg: SolverConfig = SolverConfig()
) -> SolverOutcome:
    """
    Maximize tr Y over block-diagonal Y with 0 <= Y <= rho.

    Parameters:
        rho (array-like or DensityMatrix): The state.
        blocks (ProjectiveMeasurement): Defines the block structure.
        cfg (SolverConfig, optional): Solver settings.

    Returns:
        SolverOutcome: objective = tr Y*, optimizer = Y*. Residuals report
          the PSD violations of the raw Y and rho - Y and the complementary
          slackness tr(Z (rho - Y)) with Z the dual of rho - Y >= 0.

    Raises:
        SolverFailure: If the backend fails or returns no solution.
    """
    coords = BlockCoordinates(blocks)
    rho_b = coords.to_blocks(np.asarray(getattr(rho, "mat", rho), dtype=complex))

    variables = [cp.Variable((size, size), hermitian=True) for size in coords.sizes]
    y = _assemble(variables, coords.sizes)
    slack = cp.Constant(rho_b) - y >> 0
    constraints = [var >> 0 for var in variables] + [slack]
    objective = cp.Maximize(sum(cp.real(cp.trace(var)) for var in variables))
    problem = cp.Problem(objective, constraints)
    status, certified = _solve(problem, cfg)

    parts = _block_values(variables)
    y_b = block_diag(*parts)
    complementary = float("nan")
    if slack.dual_value is not None:
        dual = np.asarray(slack.dual_value, dtype=complex)
        complementary = abs(float(np.trace(dual @ (rho_b - y_b)).real))
    residuals = {
        "y_psd": max(_psd_violation(part) for part in parts),
        "slack_psd": _psd_violation(rho_b - y_b),
        "complementary": complementary,
    }
    return _finish(
        "weight_sdp",
        float(sum(np.trace(part).real for part in parts)),
        coords.from_blocks(parts),
        residuals,
        status,
        certified,
        cfg,
        problem,
    )


@measure_time
def trace_norm_min(
    rho_like, blocks: ProjectiveMeasurement, cfg: SolverConfig = SolverConfig()
) -> SolverOutcome:
    """
    Minimize ||rho - X||_tr over block-diagonal X >= 0.

    The trace norm of the Hermitian difference is written as tr(P + Q) with
    rho - X = P - Q and P, Q >= 0.

    Returns:
        SolverOutcome: objective = ||rho - X*||_tr evaluated at the returned
          X*, optimizer = X*. Residuals report the PSD violations of the raw
          X, P and Q, the equality residual and the gap between tr(P + Q)
          and ||rho - X*||_tr.

    Raises:
        ValueError: If the input is not unit-trace within 1e-9.
        SolverFailure: If the backend fails.
    """
    mat = np.asarray(getattr(rho_like, "mat", rho_like), dtype=complex)
    if abs(np.trace(mat) - 1.0) > DEFAULT_TRACE_TOL:
        raise ValueError("trace_norm_min expects a unit-trace operator")
    coords = BlockCoordinates(blocks)
    rho_b = coords.to_blocks(mat)
    dim = coords.dim

    variables = [cp.Variable((size, size), hermitian=True) for size in coords.sizes]
    x = _assemble(variables, coords.sizes)
    positive = cp.Variable((dim, dim), hermitian=True)
    negative = cp.Variable((dim, dim), hermitian=True)
    constraints = [var >> 0 for var in variables] + [
        positive >> 0,
        negative >> 0,
        cp.Constant(rho_b) - x == positive - negative,
    ]
    objective = cp.Minimize(cp.real(cp.trace(positive + negative)))
    problem = cp.Problem(objective, constraints)
    status, certified = _solve(problem, cfg)

    parts = _block_values(variables)
    if positive.value is None or negative.value is None:
        raise SolverFailure("Solver returned no primal point")
    positive_value = hermitian_part(np.asarray(positive.value, dtype=complex))
    negative_value = hermitian_part(np.asarray(negative.value, dtype=complex))
    x_b = block_diag(*parts)
    distance = trace_norm(rho_b - x_b)
    residuals = {
        "x_psd": max(_psd_violation(part) for part in parts),
        "p_psd": _psd_violation(positive_value),
        "q_psd": _psd_violation(negative_value),
        "equality": float(np.linalg.norm(rho_b - x_b - positive_value + negative_value)),
        "objective_gap": abs(distance - float(problem.value)),
    }
    return _finish(
        "trace_norm_min",
        distance,
        coords.from_blocks(parts),
        residuals,
        status,
        certified,
        cfg,
        problem,
    )


def renyi_objective(
    k_b: np.ndarray, sigma_b: np.ndarray, alpha: float, eig_floor: float
) -> float:
    """tr[(K sigma K)^alpha]."""
    inner = hermitian_part(k_b @ sigma_b @ k_b)
    return float(np.trace(psd_power(inner, alpha, eig_floor)).real)


def _renyi_gradient(
    k_b: np.ndarray, sigma_b: np.ndarray, alpha: float, eig_floor: float
) -> np.ndarray:
    inner = hermitian_part(k_b @ sigma_b @ k_b)
    return hermitian_part(alpha * k_b @ psd_power(inner, alpha - 1.0, eig_floor) @ k_b)


def _linear_oracle(
    gradient_b: np.ndarray, coords: BlockCoordinates
) -> Tuple[float, np.ndarray]:
    """Best vertex: the top eigenvector among the diagonal blocks of G."""
    best_value = -np.inf
    best_vertex = None
    for s in coords.slices:
        system = eigh(gradient_b[s, s])
        if system.eigenvalues[0] > best_value:
            best_value = float(system.eigenvalues[0])
            vector = np.zeros(coords.dim, dtype=complex)
            vector[s] = system.eigenvectors[:, 0]
            best_vertex = np.outer(vector, vector.conj())
    return best_value, best_vertex


def _line_search(
    k_b: np.ndarray,
    sigma_b: np.ndarray,
    vertex: np.ndarray,
    alpha: float,
    eig_floor: float,
) -> float:
    direction = vertex - sigma_b

    def negative_objective(gamma: float) -> float:
        return -renyi_objective(k_b, sigma_b + gamma * direction, alpha, eig_floor)

    found = minimize_scalar(
        negative_objective,
        bounds=(0.0, 1.0),
        method="bounded",
        options={"xatol": DEFAULT_LINE_SEARCH_TOL},
    )
    candidates = [
        (found.fun, float(found.x)),
        (negative_objective(1.0), 1.0),
        (negative_objective(0.0), 0.0),
    ]
    return min(candidates)[1]


def _fixed_point_step(
    k2_b: np.ndarray,
    sigma_b: np.ndarray,
    alpha: float,
    coords: BlockCoordinates,
    eig_floor: float,
) -> np.ndarray | None:
    """
    sigma -> Delta[(sigma^{1/2} K^2 sigma^{1/2})^alpha], normalized.

    Since sigma^{1/2} G sigma^{1/2} = alpha (sigma^{1/2} K^2 sigma^{1/2})^alpha,
    the fixed points are the states with Delta(G) sigma = alpha g(sigma) sigma,
    i.e. the stationary points on the support of sigma.
    """
    root = block_diag(
        *[psd_power(part, 0.5, eig_floor) for part in coords.diagonal_blocks(sigma_b)]
    )
    inner = hermitian_part(root @ k2_b @ root)
    powered = psd_power(inner, alpha, eig_floor)
    step = block_diag(*coords.diagonal_blocks(powered))
    total = float(np.trace(step).real)
    if not np.isfinite(total) or total <= 0.0:
        return None
    return hermitian_part(step / total)


def _stalled(gaps: Sequence[float]) -> bool:
    window = DEFAULT_STALL_WINDOW
    if len(gaps) <= window:
        return False
    return gaps[-1] > DEFAULT_STALL_RATIO * gaps[-1 - window]


@measure_time
def renyi_maximize(
    k,
    blocks: ProjectiveMeasurement,
    alpha: float,
    cfg: SolverConfig = SolverConfig(),
    start=None,
) -> SolverOutcome:
    """
    Maximize g(sigma) = tr[(K sigma K)^alpha] over block-diagonal states.

    Frank-Wolfe with gradient G = alpha K (K sigma K)^{alpha-1} K (support
    convention), a linear oracle returning the top eigenvector among the
    blocks of G, and an exact concave line search (or 2/(k+2) steps). With
    ``cfg.fixed_point`` set, each iteration first tries the multiplicative
    step sigma -> Delta[(sigma^{1/2} K^2 sigma^{1/2})^alpha] / tr, accepted
    when it does not lower g; a Frank-Wolfe step is taken when it does, or
    when the gap has not shrunk by 10% over the last 10 iterations. The
    Frank-Wolfe duality gap is the stopping certificate either way.

    Parameters:
        k (array-like): K = rho^{(1-alpha)/(2 alpha)}, PSD.
        blocks (ProjectiveMeasurement): Block structure.
        alpha (float): Order in [1/2, 1).
        cfg (SolverConfig, optional): Solver settings.
        start (array-like, optional): The state whose block dephasing seeds
          the iteration. Defaults to the state recovered from K.

    Returns:
        SolverOutcome: objective = g(sigma*), optimizer = sigma*. A run that
          hits ``max_iter`` before the gap drops below ``gap_tol`` is
          returned with ``converged=False``.

    Raises:
        BadAlpha: If alpha is outside [1/2, 1).
        SolverFailure: If the iteration produces non-finite values.
    """
    if not 0.5 <= alpha < 1.0:
        raise BadAlpha(f"Renyi order {alpha} is outside [1/2, 1)")
    coords = BlockCoordinates(blocks)
    k_mat = np.asarray(k, dtype=complex)
    k_b = coords.to_blocks(k_mat)
    k2_b = hermitian_part(k_b @ k_b)

    if start is None:
        start = psd_power(k_mat, 2.0 * alpha / (1.0 - alpha), cfg.eig_floor)
    start_b = coords.to_blocks(np.asarray(getattr(start, "mat", start), dtype=complex))
    start_b = start_b / np.trace(start_b).real
    dephased = block_diag(*coords.diagonal_blocks(start_b))
    sigma_b = (
        (1.0 - DEFAULT_START_MIXING) * dephased
        + DEFAULT_START_MIXING * np.eye(coords.dim) / coords.dim
    )
    value = renyi_objective(k_b, sigma_b, alpha, cfg.eig_floor)

    gaps: List[float] = []
    converged = False
    iteration = 0
    steps = {"fixed_point": 0, "frank_wolfe": 0}
    for iteration in range(1, cfg.max_iter + 1):
        gradient = _renyi_gradient(k_b, sigma_b, alpha, cfg.eig_floor)
        top, vertex = _linear_oracle(gradient, coords)
        gap = top - float(np.trace(gradient @ sigma_b).real)
        if not np.isfinite(gap):
            raise SolverFailure("Frank-Wolfe produced a non-finite gap")
        gaps.append(gap)
        if gap <= cfg.gap_tol:
            converged = True
            break

        candidate = None
        if cfg.fixed_point and not _stalled(gaps):
            candidate = _fixed_point_step(k2_b, sigma_b, alpha, coords, cfg.eig_floor)
            if candidate is not None:
                candidate_value = renyi_objective(k_b, candidate, alpha, cfg.eig_floor)
                if candidate_value < value - DEFAULT_ASCENT_SLACK:
                    candidate = None
                else:
                    steps["fixed_point"] += 1
        if candidate is None:
            if cfg.fw_step == "exact":
                gamma = _line_search(k_b, sigma_b, vertex, alpha, cfg.eig_floor)
            else:
                gamma = 2.0 / (iteration + 2.0)
            candidate = hermitian_part((1.0 - gamma) * sigma_b + gamma * vertex)
            candidate_value = renyi_objective(k_b, candidate, alpha, cfg.eig_floor)
            steps["frank_wolfe"] += 1
        sigma_b, value = candidate, candidate_value

    if not converged:
        logger.warning(
            "renyi_maximize stopped after %d iterations with gap %.3e",
            iteration,
            gaps[-1],
        )
    logger.debug(
        "renyi_maximize: %d fixed-point and %d Frank-Wolfe steps",
        steps["fixed_point"],
        steps["frank_wolfe"],
    )

    parts = coords.diagonal_blocks(sigma_b)
    residuals = {
        "fw_gap": gaps[-1],
        "trace": abs(float(np.trace(sigma_b).real) - 1.0),
        "sigma_psd": max(_psd_violation(part) for part in parts),
    }
    return SolverOutcome(
        objective=renyi_objective(k_b, sigma_b, alpha, cfg.eig_floor),
        optimizer=coords.from_blocks(parts),
        converged=converged,
        residuals=residuals,
        iterations=iteration,
        status="converged" if converged else "max_iter",
        gap_history=gaps,
    )
