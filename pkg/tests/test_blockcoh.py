import cvxpy as cp
import numpy as np
import pytest
from scipy.linalg import fractional_matrix_power
from scipy.optimize import minimize_scalar

from povm_coherence.blockcoh import (
    MEASURE_NAMES,
    MeasureParams,
    block_measure,
    c_l1_block,
    c_rel_block,
    c_renyi_block,
    c_trace_block,
    c_tsallis_block,
    c_weight_block,
    clamp,
    renyi_objective,
    tsallis_min_divergence,
    tsallis_optimal_state,
)
from povm_coherence.errors import BadAlpha, DimMismatch, NegativeMeasure
from povm_coherence.quantum import (
    BlockPartition,
    DensityMatrix,
    ProjectiveMeasurement,
    direct_sum_state,
    fidelity,
    is_block_incoherent,
    random_block_incoherent,
    random_density,
    random_projective,
    standard_l1_coherence,
    standard_rel_coherence,
    standard_tsallis_coherence,
    tsallis_relative_entropy,
)


CLOSED_TOL = 1e-6
SOLVER_TOL = 1e-5

GOLDEN_PLUS = [
    ("l1", None, 1.0, CLOSED_TOL),
    ("rel", None, 1.0, CLOSED_TOL),
    ("tsallis", 2.0, np.sqrt(2.0) - 1.0, CLOSED_TOL),
    ("trace", None, 1.0, SOLVER_TOL),
    ("weight", None, 1.0, SOLVER_TOL),
    ("renyi", 0.5, 0.5, SOLVER_TOL),
]


@pytest.mark.parametrize("name, alpha, expected, tol", GOLDEN_PLUS)
def test_golden_values_plus_state(name, alpha, expected, tol, plus, basis2):
    result = block_measure(name, plus, basis2, MeasureParams(alpha=alpha))

    assert abs(result.value - expected) <= tol


@pytest.mark.parametrize("name, alpha, expected, tol", GOLDEN_PLUS)
def test_maximally_mixed_is_incoherent(name, alpha, expected, tol, mixed2, basis2):
    result = block_measure(name, mixed2, basis2, MeasureParams(alpha=alpha))

    assert 0.0 <= result.value <= tol


@pytest.mark.parametrize("name", MEASURE_NAMES)
def test_block_incoherent_states_vanish(name):
    p = ProjectiveMeasurement.from_blocks(4, [2, 2])
    rho = random_block_incoherent(p, seed=5)
    alpha = {"tsallis": 1.5, "renyi": 0.7}.get(name)
    tol = CLOSED_TOL if name in ("l1", "tsallis", "rel") else SOLVER_TOL

    assert block_measure(name, rho, p, MeasureParams(alpha=alpha)).value <= tol


def test_rank2_block_coherence():
    p = ProjectiveMeasurement.from_blocks(4, [2, 2])
    rho = DensityMatrix.pure([1.0, 0.0, 1.0, 0.0])

    assert abs(c_l1_block(rho, p).value - 1.0) <= 1e-10
    assert abs(c_rel_block(rho, p).value - 1.0) <= 1e-10


@pytest.mark.parametrize(
    "name, alpha", [("tsallis", 1.0), ("tsallis", 2.5), ("tsallis", 0.0),
                    ("tsallis", None), ("renyi", 0.4), ("renyi", 1.0)]
)
def test_bad_alpha(name, alpha, plus, basis2):
    with pytest.raises(BadAlpha):
        block_measure(name, plus, basis2, MeasureParams(alpha=alpha))


def test_unknown_measure_and_dimension(plus, basis2):
    with pytest.raises(ValueError):
        block_measure("fidelity", plus, basis2)
    with pytest.raises(DimMismatch):
        c_l1_block(plus, ProjectiveMeasurement.computational(3))


def test_clamp():
    assert clamp(-1e-10, 1e-9) == 0.0
    assert clamp(0.25, 1e-9) == 0.25
    assert clamp(1.0 + 1e-8, 1e-6, upper=1.0) == 1.0
    with pytest.raises(NegativeMeasure):
        clamp(-1e-3, 1e-6)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("alpha", [0.3, 0.8, 1.2, 2.0])
def test_tsallis_closed_form(seed, alpha):
    rng = np.random.default_rng(seed)
    p = random_projective(4, [1, 3], seed=rng)
    rho = random_density(4, seed=rng)

    sigma = tsallis_optimal_state(rho, p, alpha)
    closed = tsallis_min_divergence(rho, p, alpha)

    assert is_block_incoherent(DensityMatrix(sigma), p)
    assert abs(tsallis_relative_entropy(rho, sigma, alpha) - closed) <= 1e-8
    for _ in range(20):
        other = random_block_incoherent(p, seed=rng)
        assert tsallis_relative_entropy(rho, other, alpha) >= closed - 1e-9


def test_tsallis_certificate(plus, basis2):
    result = c_tsallis_block(plus, basis2, 2.0)

    assert np.allclose(result.certificate["sigma"], np.eye(2) / 2)
    assert abs(result.certificate["normalizer"] - np.sqrt(2.0)) <= 1e-10


def test_tsallis_approaches_relative_entropy(rng):
    p = random_projective(3, [1, 2], seed=rng)
    rho = random_density(3, seed=rng)
    relative = c_rel_block(rho, p).value

    for alpha in (1.0 - 1e-4, 1.0 + 1e-4):
        near = c_tsallis_block(rho, p, alpha).value / np.log(2.0)
        assert abs(near - relative) <= 1e-3


@pytest.mark.parametrize("seed", range(5))
def test_rank1_reduction(seed):
    rho = random_density(3, seed=seed)
    basis = ProjectiveMeasurement.computational(3)

    assert abs(c_l1_block(rho, basis).value - standard_l1_coherence(rho)) <= 1e-8
    assert abs(c_rel_block(rho, basis).value - standard_rel_coherence(rho)) <= 1e-8
    for alpha in (0.5, 1.7):
        closed = c_tsallis_block(rho, basis, alpha).value
        assert abs(closed - standard_tsallis_coherence(rho, alpha)) <= 1e-8


def test_trace_certificate(rng):
    p = random_projective(3, [2, 1], seed=rng)
    rho = random_density(3, seed=rng)

    result = c_trace_block(rho, p)

    assert result.diagnostics.converged
    assert result.certificate["lambda"] > 0.0
    sigma = result.certificate["sigma"]
    assert abs(np.trace(sigma).real - 1.0) <= 1e-8
    assert is_block_incoherent(DensityMatrix(sigma, normalize=True), p, tol=1e-6)
    assert result.value <= c_l1_block(rho, p).value + SOLVER_TOL


def test_weight_certificate(plus, basis2):
    result = c_weight_block(plus, basis2)

    assert result.certificate["s"] == result.value
    assert result.diagnostics.status in ("optimal", "optimal_inaccurate")


def _weight_oracle(a: float, c: complex) -> float:
    """
    1 - max tr Y over diagonal 0 <= Y <= rho for rho = [[a, c], [c*, 1 - a]],
    i.e. min u + |c|^2/u over a - u, 1 - a - |c|^2/u in [0, a] x [0, 1 - a].
    """
    c2 = abs(c) ** 2
    if c2 == 0.0:
        return 0.0
    if c2 / (1.0 - a) >= a:
        return a + c2 / a
    found = minimize_scalar(
        lambda u: u + c2 / u,
        bounds=(c2 / (1.0 - a), a),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(found.fun)


@pytest.mark.parametrize(
    "a, c, expected",
    [(0.5, 0.25, 0.5), (0.7, 0.3 + 0.1j, None), (0.5, 0.5j, 1.0)],
)
def test_weight_against_oracle(a, c, expected, basis2):
    rho = DensityMatrix([[a, c], [np.conj(c), 1.0 - a]])
    oracle = _weight_oracle(a, c)
    if expected is not None:
        assert abs(oracle - expected) <= 1e-9

    assert abs(c_weight_block(rho, basis2).value - oracle) <= SOLVER_TOL


def _renyi_oracle(rho: np.ndarray, alpha: float) -> float:
    """Line search over the diagonal states diag(t, 1 - t) of a qubit."""
    kernel = fractional_matrix_power(rho, (1.0 - alpha) / (2.0 * alpha))

    def negative(t: float) -> float:
        inner = kernel @ np.diag([t, 1.0 - t]) @ kernel.conj().T
        values = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
        return -float(np.sum(values ** alpha))

    found = minimize_scalar(
        negative, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12}
    )
    best = max(-found.fun, -negative(0.0), -negative(1.0))
    return 1.0 - best ** (1.0 / (1.0 - alpha))


@pytest.mark.parametrize("seed, alpha", [(0, 0.5), (1, 0.6), (2, 0.75), (3, 0.9)])
def test_renyi_against_oracle(seed, alpha, basis2):
    rho = random_density(2, seed=seed)

    result = c_renyi_block(rho, basis2, alpha)

    assert result.diagnostics.converged
    assert abs(result.value - _renyi_oracle(rho.mat, alpha)) <= SOLVER_TOL


def test_renyi_objective_at_certificate(plus, basis2):
    result = c_renyi_block(plus, basis2, 0.5)

    objective = renyi_objective(plus, result.certificate["sigma"], 0.5)

    assert abs(objective - result.certificate["objective"]) <= 1e-10


def _fidelity_oracle(rho: np.ndarray, sizes) -> float:
    """
    1 - max F(rho, sigma)^2 over block-diagonal sigma, with the root fidelity
    written as max Re tr X subject to [[rho, X], [X^dagger, sigma]] >= 0.
    """
    dim = rho.shape[0]
    joint = cp.Variable((2 * dim, 2 * dim), hermitian=True)
    sigma = joint[dim:, dim:]
    edges = np.cumsum([0, *sizes])
    constraints = [joint >> 0, joint[:dim, :dim] == rho, cp.real(cp.trace(sigma)) == 1]
    for i in range(len(sizes)):
        for j in range(len(sizes)):
            if i != j:
                constraints.append(
                    sigma[edges[i]:edges[i + 1], edges[j]:edges[j + 1]] == 0
                )
    problem = cp.Problem(cp.Maximize(cp.real(cp.trace(joint[:dim, dim:]))), constraints)
    problem.solve()
    return 1.0 - problem.value ** 2


@pytest.mark.parametrize(
    "seed, sizes", [(0, [1, 1]), (1, [1, 2]), (2, [2, 2]), (3, [1, 1, 2]), (4, [1, 2, 3])]
)
def test_renyi_half_against_fidelity_oracle(seed, sizes):
    dim = sum(sizes)
    rng = np.random.default_rng(seed)
    p = ProjectiveMeasurement.from_blocks(dim, sizes)
    rho = random_density(dim, rank=int(rng.integers(1, dim + 1)), seed=rng)

    result = c_renyi_block(rho, p, 0.5)

    assert result.diagnostics.converged
    assert abs(result.value - _fidelity_oracle(rho.mat, sizes)) <= SOLVER_TOL
    sigma = result.certificate["sigma"]
    assert abs(result.value - (1.0 - fidelity(rho, sigma) ** 2)) <= 1e-8


@pytest.mark.parametrize("alpha", [0.5, 0.7])
def test_renyi_additive_on_direct_sums(alpha):
    rng = np.random.default_rng(21)
    p = random_projective(5, [1, 2, 2], seed=rng)
    partition = BlockPartition(p, (1,))
    parts = []
    for group in (partition.first_group, partition.second_group):
        projector = partition.projector(group)
        state = random_density(5, seed=rng).mat
        parts.append(DensityMatrix(projector @ state @ projector, normalize=True))

    summed = direct_sum_state(0.4, parts[0], 0.6, parts[1], partition)
    values = [c_renyi_block(state, p, alpha).value for state in (summed, *parts)]

    assert abs(values[0] - 0.4 * values[1] - 0.6 * values[2]) <= SOLVER_TOL
