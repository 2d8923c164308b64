import cvxpy as cp
import numpy as np
import pytest

from povm_coherence import optim
from povm_coherence.errors import BadAlpha, DimMismatch
from povm_coherence.matcore import psd_power, trace_norm
from povm_coherence.optim import (
    BlockCoordinates,
    SolverConfig,
    renyi_maximize,
    renyi_objective,
    trace_norm_min,
    weight_sdp,
)
from povm_coherence.quantum import (
    BlockPartition,
    DensityMatrix,
    ProjectiveMeasurement,
    dephase_operator,
    direct_sum_state,
    random_block_incoherent,
    random_density,
    random_projective,
)


MIXED_BLOCKS = {2: [1, 1], 3: [1, 2], 4: [2, 2], 6: [1, 2, 3]}


def _kernel(rho, alpha):
    mat = np.asarray(getattr(rho, "mat", rho))
    return psd_power(mat, (1.0 - alpha) / (2.0 * alpha))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"feas_tol": 0.0},
        {"gap_tol": -1.0},
        {"max_iter": 0},
        {"fw_step": "armijo"},
    ],
)
def test_solver_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_block_coordinates_round_trip(rng):
    p = random_projective(4, [2, 2], seed=rng)
    x = dephase_operator(random_density(4, seed=rng).mat, p)
    coords = BlockCoordinates(p)

    parts = coords.diagonal_blocks(coords.to_blocks(x))

    assert [part.shape for part in parts] == [(2, 2), (2, 2)]
    assert np.allclose(coords.from_blocks(parts), x)
    with pytest.raises(DimMismatch):
        coords.to_blocks(np.eye(3))


def test_weight_sdp_examples(plus, mixed2, basis2):
    coherent = weight_sdp(plus, basis2)
    incoherent = weight_sdp(mixed2, basis2)

    assert abs(coherent.objective) <= 1e-6
    assert abs(incoherent.objective - 1.0) <= 1e-6
    assert incoherent.converged
    assert np.allclose(incoherent.optimizer, mixed2.mat, atol=1e-6)
    assert {"y_psd", "slack_psd", "complementary"} <= set(incoherent.residuals)


def test_weight_sdp_feasible_optimizer(rng):
    p = random_projective(3, [1, 2], seed=rng)
    rho = random_density(3, seed=rng)

    outcome = weight_sdp(rho, p)

    y = outcome.optimizer
    assert np.allclose(y, dephase_operator(y, p), atol=1e-7)
    assert np.linalg.eigvalsh(y).min() >= -1e-7
    assert np.linalg.eigvalsh(rho.mat - y).min() >= -1e-7


def test_trace_norm_min_examples(mixed2, basis2):
    outcome = trace_norm_min(mixed2, basis2)

    assert abs(outcome.objective) <= 1e-6
    assert outcome.converged


def test_trace_norm_min_requires_unit_trace(basis2):
    with pytest.raises(ValueError):
        trace_norm_min(np.eye(2), basis2)


def test_renyi_maximize_plus_state(plus, basis2):
    alpha = 0.5
    kernel = psd_power(plus.mat, (1.0 - alpha) / (2.0 * alpha))

    outcome = renyi_maximize(kernel, basis2, alpha, start=plus)

    assert outcome.converged
    assert outcome.status == "converged"
    assert outcome.gap_history[-1] <= SolverConfig().gap_tol
    assert abs(outcome.objective - 1.0 / np.sqrt(2.0)) <= 1e-6
    assert np.allclose(outcome.optimizer, np.eye(2) / 2, atol=1e-4)


def test_renyi_maximize_flags_iteration_cap(rng):
    p = ProjectiveMeasurement.computational(3)
    rho = random_density(3, seed=rng)
    alpha = 0.6
    kernel = psd_power(rho.mat, (1.0 - alpha) / (2.0 * alpha))
    cfg = SolverConfig(fw_step="diminishing", max_iter=5, gap_tol=1e-14)

    outcome = renyi_maximize(kernel, p, alpha, cfg, start=rho)

    assert not outcome.converged
    assert outcome.status == "max_iter"
    assert outcome.iterations == 5
    assert len(outcome.gap_history) == 5


@pytest.mark.parametrize("alpha", [0.4, 1.0, 1.5])
def test_renyi_maximize_rejects_alpha(alpha, plus, basis2):
    with pytest.raises(BadAlpha):
        renyi_maximize(plus.mat, basis2, alpha)


def test_renyi_maximize_incoherent_state_is_optimal(rng):
    p = ProjectiveMeasurement.from_blocks(4, [2, 2])
    rho = DensityMatrix(dephase_operator(random_density(4, seed=rng).mat, p))
    alpha = 0.75
    kernel = psd_power(rho.mat, (1.0 - alpha) / (2.0 * alpha))

    outcome = renyi_maximize(kernel, p, alpha, start=rho)

    assert abs(outcome.objective - 1.0) <= 1e-6


def test_trace_norm_min_residuals(mixed2, basis2):
    outcome = trace_norm_min(mixed2, basis2)

    assert {"x_psd", "p_psd", "q_psd", "equality", "objective_gap"} <= set(
        outcome.residuals
    )


@pytest.mark.parametrize("seed", range(10))
def test_trace_norm_min_below_dephasing_distance(seed):
    rng = np.random.default_rng(seed)
    p = random_projective(4, [1, 3], seed=rng)
    rho = random_density(4, seed=rng)

    outcome = trace_norm_min(rho, p)

    assert outcome.objective <= trace_norm(rho.mat - dephase_operator(rho.mat, p)) + 1e-6


def test_uncertified_solve_is_not_converged(monkeypatch, mixed2, basis2):
    solve = optim._solve

    def retried(problem, cfg):
        solve(problem, cfg)
        return cp.OPTIMAL_INACCURATE, False

    monkeypatch.setattr(optim, "_solve", retried)

    weight = weight_sdp(mixed2, basis2)
    distance = trace_norm_min(mixed2, basis2)

    assert abs(weight.objective - 1.0) <= 1e-6
    assert not weight.converged
    assert not distance.converged


def test_residuals_gate_convergence(monkeypatch, mixed2, basis2):
    monkeypatch.setattr(optim, "DEFAULT_CERTIFICATE_TOL", -1.0)

    assert not weight_sdp(mixed2, basis2).converged
    assert not trace_norm_min(mixed2, basis2).converged


@pytest.mark.parametrize("seed", range(10))
def test_renyi_objective_is_concave(seed):
    rng = np.random.default_rng(seed)
    p = random_projective(4, [2, 2], seed=rng)
    alpha = float(rng.uniform(0.5, 0.95))
    kernel = _kernel(random_density(4, seed=rng), alpha)
    first = random_block_incoherent(p, seed=rng).mat
    second = random_block_incoherent(p, rank=1, seed=rng).mat
    floor = SolverConfig().eig_floor
    ends = [renyi_objective(kernel, x, alpha, floor) for x in (first, second)]

    for t in np.linspace(0.0, 1.0, 11):
        inner = renyi_objective(kernel, t * first + (1.0 - t) * second, alpha, floor)
        assert inner >= t * ends[0] + (1.0 - t) * ends[1] - 1e-9


def test_renyi_optimum_dominates_random_states():
    rng = np.random.default_rng(11)
    p = random_projective(4, [1, 3], seed=rng)
    rho = random_density(4, seed=rng)
    alpha = 0.7
    kernel = _kernel(rho, alpha)
    floor = SolverConfig().eig_floor

    outcome = renyi_maximize(kernel, p, alpha, start=rho)

    assert outcome.converged
    best_random = max(
        renyi_objective(kernel, random_block_incoherent(p, seed=rng).mat, alpha, floor)
        for _ in range(200)
    )
    assert outcome.objective >= best_random - 1e-7


@pytest.mark.parametrize("seed", range(5))
def test_renyi_gap_shrinks_window_by_window(seed):
    rng = np.random.default_rng(seed)
    p = random_projective(4, [2, 2], seed=rng)
    rho = random_density(4, seed=rng)
    alpha = 0.9

    outcome = renyi_maximize(_kernel(rho, alpha), p, alpha, start=rho)

    assert outcome.converged
    gaps = outcome.gap_history
    windows = [max(gaps[i:i + 10]) for i in range(0, len(gaps), 10)]
    for earlier, later in zip(windows, windows[1:]):
        assert later <= earlier * (1.0 + 1e-6) + 1e-12


@pytest.mark.parametrize("alpha", [0.5, 0.75, 0.9])
@pytest.mark.parametrize("dim", sorted(MIXED_BLOCKS))
def test_renyi_maximize_converges_on_rank_deficient_states(dim, alpha):
    rng = np.random.default_rng(dim)
    p = random_projective(dim, MIXED_BLOCKS[dim], seed=rng)
    rho = random_density(dim, rank=max(1, dim // 2), seed=rng)
    cfg = SolverConfig()

    outcome = renyi_maximize(_kernel(rho, alpha), p, alpha, cfg, start=rho)

    assert outcome.converged
    assert outcome.residuals["fw_gap"] <= cfg.gap_tol
    assert outcome.iterations < cfg.max_iter
    assert abs(np.trace(outcome.optimizer).real - 1.0) <= 1e-9


@pytest.mark.parametrize("alpha", [0.5, 0.75])
def test_renyi_maximize_converges_on_direct_sums(alpha):
    rng = np.random.default_rng(5)
    p = random_projective(6, [1, 2, 1, 2], seed=rng)
    partition = BlockPartition(p, (0, 2))

    def compressed(group):
        projector = partition.projector(group)
        state = random_density(6, seed=rng).mat
        return DensityMatrix(projector @ state @ projector, normalize=True)

    rho = direct_sum_state(
        0.3,
        compressed(partition.first_group),
        0.7,
        compressed(partition.second_group),
        partition,
    )

    outcome = renyi_maximize(_kernel(rho, alpha), p, alpha, start=rho)

    assert outcome.converged
    assert outcome.residuals["fw_gap"] <= SolverConfig().gap_tol


def test_frank_wolfe_only_is_bounded_by_its_gap(rng):
    p = ProjectiveMeasurement.from_blocks(3, [1, 2])
    rho = random_density(3, seed=rng)
    alpha = 0.6
    kernel = _kernel(rho, alpha)

    hybrid = renyi_maximize(kernel, p, alpha, start=rho)
    plain = renyi_maximize(
        kernel, p, alpha, SolverConfig(fixed_point=False, max_iter=2000), start=rho
    )

    assert hybrid.converged
    assert plain.objective <= hybrid.objective + SolverConfig().gap_tol
    assert hybrid.objective - plain.objective <= plain.residuals["fw_gap"] + 1e-9
