"""
States, measurements and channels.

The constructors validate their type invariants and raise ``InvalidState``
when the data do not describe a legal object. All objects are immutable
after construction: stored arrays are copied and marked read-only.
"""
from dataclasses import dataclass
from functools import cached_property
import logging
from typing import List, Sequence, Tuple

import numpy as np

from povm_coherence.errors import (
    DegenerateSample,
    DimMismatch,
    InvalidState,
    SupportViolation,
)
from povm_coherence.matcore import (
    DEFAULT_EIG_FLOOR,
    as_cmatrix,
    condition_number,
    dagger,
    eigh,
    entropy_term,
    hermitian_part,
    hermiticity_residual,
    inverse_sqrt,
    min_eigenvalue,
    psd_power,
    psd_sqrt,
    trace_norm,
)


logger = logging.getLogger(__name__)

SeedLike = int | np.random.Generator | np.random.SeedSequence | None

DEFAULT_STATE_HERMITIAN_TOL = 1e-10
DEFAULT_STATE_PSD_TOL = 1e-9
DEFAULT_STATE_TRACE_TOL = 1e-10
DEFAULT_PROJECTOR_TOL = 1e-10
DEFAULT_EFFECT_TOL = 1e-10
DEFAULT_KRAUS_TOL = 1e-9
DEFAULT_INCOHERENCE_TOL = 1e-9
DEFAULT_CRITERIA_AGREEMENT_TOL = 1e-7
DEFAULT_BRANCH_DROP = 1e-12
DEFAULT_SUPPORT_TOL = 1e-9
DEFAULT_MAX_CONDITION = 1e12
DEFAULT_MAX_RESAMPLES = 10


def _frozen(m: np.ndarray) -> np.ndarray:
    arr = np.array(m, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


def state_matrix(rho) -> np.ndarray:
    """Return the matrix of a DensityMatrix, or the array itself."""
    if isinstance(rho, DensityMatrix):
        return rho.mat
    if hasattr(rho, "mat"):
        return np.asarray(rho.mat)
    return as_cmatrix(rho)


def check_dim(mat: np.ndarray, dim: int, what: str = "operator") -> None:
    if mat.shape != (dim, dim):
        raise DimMismatch(
            f"Expected a {dim}x{dim} {what}, got shape {mat.shape}"
        )


class DensityMatrix:
    """
    A positive semidefinite, unit-trace complex matrix.

    Parameters:
        mat (array-like): Square matrix.
        normalize (bool, optional): When True the Hermitian part of ``mat``
          is taken and divided by its trace before validation. Used for
          states derived by arithmetic (branches, mixtures, embeddings).

    Raises:
        InvalidState: If the matrix is not Hermitian within 1e-10, has an
          eigenvalue below -1e-9 or a trace further than 1e-10 from 1.
    """

    def __init__(self, mat, normalize: bool = False):
        try:
            mat = as_cmatrix(mat)
        except ValueError as error:
            raise InvalidState(str(error)) from error
        if mat.shape[0] != mat.shape[1]:
            raise InvalidState(f"State of shape {mat.shape} is not square")

        if normalize:
            mat = hermitian_part(mat)
            trace = np.trace(mat).real
            if trace <= 0.0:
                raise InvalidState("Cannot normalize an operator with trace <= 0")
            mat = mat / trace

        scale = max(1.0, float(np.linalg.norm(mat)))
        if hermiticity_residual(mat) > DEFAULT_STATE_HERMITIAN_TOL * scale:
            raise InvalidState("State is not Hermitian")
        if abs(np.trace(mat) - 1.0) > DEFAULT_STATE_TRACE_TOL:
            raise InvalidState(f"State trace {np.trace(mat).real} is not 1")
        if min_eigenvalue(mat) < -DEFAULT_STATE_PSD_TOL:
            raise InvalidState("State has a negative eigenvalue")

        self._mat = _frozen(mat)

    @property
    def mat(self) -> np.ndarray:
        return self._mat

    @property
    def dim(self) -> int:
        return self._mat.shape[0]

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @classmethod
    def pure(cls, vector) -> "DensityMatrix":
        psi = np.asarray(vector, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), normalize=True)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


class ProjectiveMeasurement:
    """
    A complete set of mutually orthogonal projectors {P_i}.

    Parameters:
        projectors (Sequence[array-like]): The projectors P_1..P_n.

    Raises:
        InvalidState: If a projector is not idempotent, two projectors are
          not orthogonal, or they do not sum to the identity (all at 1e-10,
          Frobenius).
    """

    def __init__(self, projectors: Sequence):
        if len(projectors) == 0:
            raise InvalidState("A measurement needs at least one projector")
        mats = []
        for projector in projectors:
            try:
                mats.append(as_cmatrix(projector))
            except ValueError as error:
                raise InvalidState(str(error)) from error

        dim = mats[0].shape[0]
        for index, mat in enumerate(mats):
            if mat.shape != (dim, dim):
                raise InvalidState(f"Projector {index} has shape {mat.shape}")
            if np.linalg.norm(mat @ mat - mat) > DEFAULT_PROJECTOR_TOL:
                raise InvalidState(f"Projector {index} is not idempotent")
            if hermiticity_residual(mat) > DEFAULT_PROJECTOR_TOL:
                raise InvalidState(f"Projector {index} is not Hermitian")
        for i, first in enumerate(mats):
            for j in range(i + 1, len(mats)):
                if np.linalg.norm(first @ mats[j]) > DEFAULT_PROJECTOR_TOL:
                    raise InvalidState(
                        f"Projectors {i} and {j} are not orthogonal"
                    )
        if np.linalg.norm(sum(mats) - np.eye(dim)) > DEFAULT_PROJECTOR_TOL:
            raise InvalidState("Projectors do not sum to the identity")

        self._projectors = tuple(_frozen(mat) for mat in mats)
        self._block_dims = tuple(
            int(round(np.trace(mat).real)) for mat in self._projectors
        )

    @property
    def projectors(self) -> Tuple[np.ndarray, ...]:
        return self._projectors

    @property
    def block_dims(self) -> Tuple[int, ...]:
        return self._block_dims

    @property
    def dim(self) -> int:
        return self._projectors[0].shape[0]

    @property
    def n(self) -> int:
        return len(self._projectors)

    @cached_property
    def block_basis(self) -> Tuple[np.ndarray, Tuple[slice, ...]]:
        """
        A unitary whose columns are grouped by block, and the column slices.

        Conjugating an operator X as U^dagger X U brings every block of the
        measurement onto a contiguous diagonal block.
        """
        columns = []
        slices = []
        start = 0
        for projector, size in zip(self._projectors, self._block_dims):
            vectors = eigh(projector).eigenvectors[:, :size]
            columns.append(vectors)
            slices.append(slice(start, start + size))
            start += size
        basis = np.hstack(columns)
        basis.setflags(write=False)
        return basis, tuple(slices)

    @classmethod
    def computational(cls, dim: int) -> "ProjectiveMeasurement":
        """The rank-1 measurement in the standard basis."""
        identity = np.eye(dim)
        return cls([np.outer(identity[k], identity[k]) for k in range(dim)])

    @classmethod
    def from_blocks(
        cls, dim: int, block_dims: Sequence[int]
    ) -> "ProjectiveMeasurement":
        """Projectors onto contiguous groups of standard basis vectors."""
        if sum(block_dims) != dim or min(block_dims) < 1:
            raise InvalidState(
                f"Block dimensions {list(block_dims)} do not partition {dim}"
            )
        projectors = []
        start = 0
        for size in block_dims:
            diagonal = np.zeros(dim)
            diagonal[start:start + size] = 1.0
            projectors.append(np.diag(diagonal))
            start += size
        return cls(projectors)

    def __repr__(self) -> str:
        return (
            f"ProjectiveMeasurement(dim={self.dim}, "
            f"block_dims={list(self.block_dims)})"
        )


class Povm:
    """
    A POVM {E_i} together with a Kraus family {A_i}, E_i = A_i^dagger A_i.

    Parameters:
        effects (Sequence[array-like]): PSD effects summing to identity.
        kraus (Sequence[array-like], optional): Kraus operators. When
          omitted the principal square root A_i = E_i^{1/2} is used.

    Raises:
        InvalidState: On any violated invariant.
    """

    def __init__(self, effects: Sequence, kraus: Sequence | None = None):
        if len(effects) == 0:
            raise InvalidState("A POVM needs at least one effect")
        try:
            effect_mats = [as_cmatrix(effect) for effect in effects]
        except ValueError as error:
            raise InvalidState(str(error)) from error

        dim = effect_mats[0].shape[0]
        for index, effect in enumerate(effect_mats):
            if effect.shape != (dim, dim):
                raise InvalidState(f"Effect {index} has shape {effect.shape}")
            if hermiticity_residual(effect) > DEFAULT_EFFECT_TOL:
                raise InvalidState(f"Effect {index} is not Hermitian")
            if min_eigenvalue(effect) < -DEFAULT_EFFECT_TOL:
                raise InvalidState(f"Effect {index} is not PSD")
        if np.linalg.norm(sum(effect_mats) - np.eye(dim)) > DEFAULT_EFFECT_TOL:
            raise InvalidState("Effects do not sum to the identity")

        if kraus is None:
            kraus_mats = [psd_sqrt(effect) for effect in effect_mats]
        else:
            if len(kraus) != len(effect_mats):
                raise InvalidState("Kraus family and effects differ in length")
            try:
                kraus_mats = [as_cmatrix(op) for op in kraus]
            except ValueError as error:
                raise InvalidState(str(error)) from error
            for index, (op, effect) in enumerate(zip(kraus_mats, effect_mats)):
                if op.shape != (dim, dim):
                    raise InvalidState(f"Kraus operator {index} is not {dim}x{dim}")
                if np.linalg.norm(dagger(op) @ op - effect) > DEFAULT_KRAUS_TOL:
                    raise InvalidState(
                        f"Kraus operator {index} does not match its effect"
                    )
        completeness = sum(dagger(op) @ op for op in kraus_mats)
        if np.linalg.norm(completeness - np.eye(dim)) > DEFAULT_KRAUS_TOL:
            raise InvalidState("Kraus family is not complete")

        self._effects = tuple(_frozen(effect) for effect in effect_mats)
        self._kraus = tuple(_frozen(op) for op in kraus_mats)

    @property
    def effects(self) -> Tuple[np.ndarray, ...]:
        return self._effects

    @property
    def kraus(self) -> Tuple[np.ndarray, ...]:
        return self._kraus

    @property
    def dim(self) -> int:
        return self._effects[0].shape[0]

    @property
    def n(self) -> int:
        return len(self._effects)

    @classmethod
    def from_effects(cls, effects: Sequence) -> "Povm":
        """POVM with the principal square-root Kraus family."""
        return cls(effects)

    @classmethod
    def from_kraus(cls, kraus: Sequence) -> "Povm":
        mats = [as_cmatrix(op) for op in kraus]
        effects = [hermitian_part(dagger(op) @ op) for op in mats]
        return cls(effects, mats)

    @classmethod
    def from_projective(cls, measurement: ProjectiveMeasurement) -> "Povm":
        return cls(measurement.projectors, measurement.projectors)

    @classmethod
    def trivial(cls, dim: int) -> "Povm":
        """The one-outcome POVM {I}."""
        return cls([np.eye(dim)])

    def with_gauge(self, unitaries: Sequence) -> "Povm":
        """Return the POVM with Kraus family {U_i A_i}; effects unchanged."""
        if len(unitaries) != self.n:
            raise DimMismatch("One unitary per outcome is required")
        kraus = [np.asarray(u) @ op for u, op in zip(unitaries, self._kraus)]
        return Povm(self._effects, kraus)

    def __repr__(self) -> str:
        return f"Povm(dim={self.dim}, n={self.n})"


@dataclass(frozen=True)
class BiStructure:
    """
    Block-incoherent structure of one Kraus operator,
    K = sum_i P_{f(i)} M P_i.

    Attributes:
        index_map (Tuple[int, ...]): f as a tuple, f(i) = index_map[i].
        operator (np.ndarray): The matrix M.
    """
    index_map: Tuple[int, ...]
    operator: np.ndarray

    def assemble(self, measurement: ProjectiveMeasurement) -> np.ndarray:
        projectors = measurement.projectors
        return sum(
            projectors[target] @ self.operator @ projectors[source]
            for source, target in enumerate(self.index_map)
        )


class KrausChannel:
    """
    A channel given by Kraus operators {K_l} with sum K_l^dagger K_l = I.

    Parameters:
        kraus_ops (Sequence[array-like]): The Kraus operators.
        bi_structure (Sequence[BiStructure], optional): Per-operator block
          structure with respect to ``measurement``.
        measurement (ProjectiveMeasurement, optional): Required when
          ``bi_structure`` is given.

    Raises:
        InvalidState: If completeness fails at 1e-9 or a recorded structure
          does not match its operator.
    """

    def __init__(
        self,
        kraus_ops: Sequence,
        bi_structure: Sequence[BiStructure] | None = None,
        measurement: ProjectiveMeasurement | None = None,
    ):
        if len(kraus_ops) == 0:
            raise InvalidState("A channel needs at least one Kraus operator")
        mats = [as_cmatrix(op) for op in kraus_ops]
        dim = mats[0].shape[1]
        completeness = sum(dagger(op) @ op for op in mats)
        if completeness.shape != (dim, dim) or (
            np.linalg.norm(completeness - np.eye(dim)) > DEFAULT_KRAUS_TOL
        ):
            raise InvalidState("Kraus operators are not complete")

        if bi_structure is not None:
            if measurement is None:
                raise InvalidState("Block structure needs its measurement")
            if len(bi_structure) != len(mats):
                raise InvalidState("One block structure per Kraus operator")
            projectors = measurement.projectors
            for op, structure in zip(mats, bi_structure):
                for source, target in enumerate(structure.index_map):
                    for other, projector in enumerate(projectors):
                        if other == target:
                            continue
                        leak = projector @ op @ projectors[source]
                        if np.linalg.norm(leak) > DEFAULT_KRAUS_TOL:
                            raise InvalidState(
                                "Kraus operator leaks outside its target block"
                            )
            bi_structure = tuple(bi_structure)

        self._kraus = tuple(_frozen(op) for op in mats)
        self._bi_structure = bi_structure
        self._measurement = measurement

    @property
    def kraus_ops(self) -> Tuple[np.ndarray, ...]:
        return self._kraus

    @property
    def bi_structure(self) -> Tuple[BiStructure, ...] | None:
        return self._bi_structure

    @property
    def measurement(self) -> ProjectiveMeasurement | None:
        return self._measurement

    @property
    def dim(self) -> int:
        return self._kraus[0].shape[1]

    def __repr__(self) -> str:
        return f"KrausChannel(dim={self.dim}, num_kraus={len(self._kraus)})"


@dataclass(frozen=True)
class BranchOutcome:
    probability: float
    state: DensityMatrix


@dataclass(frozen=True)
class BlockPartition:
    """
    A split of the blocks of a measurement into two groups.

    Attributes:
        measurement (ProjectiveMeasurement): The measurement.
        first_group (Tuple[int, ...]): Block indices of group 1; all other
          blocks form group 2.
    """
    measurement: ProjectiveMeasurement
    first_group: Tuple[int, ...]

    @property
    def second_group(self) -> Tuple[int, ...]:
        return tuple(
            k for k in range(self.measurement.n) if k not in self.first_group
        )

    def projector(self, group: Sequence[int]) -> np.ndarray:
        projectors = self.measurement.projectors
        total = np.zeros_like(projectors[0])
        for k in group:
            total = total + projectors[k]
        return total


# --- block dephasing and incoherence ---------------------------------------

def block_dephase(rho, p: ProjectiveMeasurement) -> DensityMatrix:
    """
    Block dephasing Delta_P(rho) = sum_i P_i rho P_i.

    Raises:
        DimMismatch: If the state and measurement dimensions differ.
    """
    mat = state_matrix(rho)
    check_dim(mat, p.dim, "state")
    return DensityMatrix(sum(pr @ mat @ pr for pr in p.projectors))


def dephase_operator(x: np.ndarray, p: ProjectiveMeasurement) -> np.ndarray:
    """Block dephasing applied to an arbitrary operator."""
    check_dim(x, p.dim)
    return sum(pr @ x @ pr for pr in p.projectors)


def off_block_norm(rho, p: ProjectiveMeasurement) -> float:
    """max over i != j of ||P_i rho P_j||_F (0 for a single block)."""
    mat = state_matrix(rho)
    check_dim(mat, p.dim, "state")
    projectors = p.projectors
    worst = 0.0
    for i, first in enumerate(projectors):
        for j, second in enumerate(projectors):
            if i != j:
                worst = max(worst, float(np.linalg.norm(first @ mat @ second)))
    return worst


def is_block_incoherent(
    rho, p: ProjectiveMeasurement, tol: float = DEFAULT_INCOHERENCE_TOL
) -> bool:
    """True iff every off-block part P_i rho P_j (i != j) vanishes within tol."""
    return off_block_norm(rho, p) <= tol


def povm_incoherence_norms(rho, e: Povm) -> Tuple[float, float]:
    """
    Return (max_{i!=j} ||E_i rho E_j||_F, max_{i!=j} ||A_i rho A_j^dagger||_F).
    """
    mat = state_matrix(rho)
    check_dim(mat, e.dim, "state")
    effect_norm = 0.0
    kraus_norm = 0.0
    for i in range(e.n):
        for j in range(e.n):
            if i == j:
                continue
            effect_norm = max(
                effect_norm,
                float(np.linalg.norm(e.effects[i] @ mat @ e.effects[j])),
            )
            kraus_norm = max(
                kraus_norm,
                float(np.linalg.norm(e.kraus[i] @ mat @ dagger(e.kraus[j]))),
            )
    return effect_norm, kraus_norm


def is_povm_incoherent(
    rho, e: Povm, tol: float = DEFAULT_INCOHERENCE_TOL
) -> bool:
    """
    True iff E_i rho E_j vanishes within tol for every i != j.

    The equivalent Kraus-form criterion A_i rho A_j^dagger = 0 is evaluated
    alongside; a disagreement of the two at DEFAULT_CRITERIA_AGREEMENT_TOL
    is logged.
    """
    effect_norm, kraus_norm = povm_incoherence_norms(rho, e)
    agreement_tol = DEFAULT_CRITERIA_AGREEMENT_TOL
    if (effect_norm <= agreement_tol) != (kraus_norm <= agreement_tol):
        logger.warning(
            "Incoherence criteria disagree: effect form %.3e, Kraus form %.3e",
            effect_norm,
            kraus_norm,
        )
    return effect_norm <= tol


def probabilities(rho, e: Povm) -> np.ndarray:
    """Outcome probabilities tr(E_i rho)."""
    mat = state_matrix(rho)
    check_dim(mat, e.dim, "state")
    return np.array([np.trace(effect @ mat).real for effect in e.effects])


# --- random generators -------------------------------------------------------

def _gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)


def random_unitary(dim: int, seed: SeedLike = None) -> np.ndarray:
    """
    A Haar-random unitary: QR of a complex Ginibre matrix with the phases of
    R's diagonal moved into Q.
    """
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(_gaussian(rng, (dim, dim)))
    diagonal = np.diag(r)
    phases = diagonal / np.abs(diagonal)
    return q * phases.conj()


def random_density(
    dim: int, rank: int | None = None, seed: SeedLike = None
) -> DensityMatrix:
    """
    A random state GG^dagger / tr(GG^dagger) with G a dim x rank Gaussian.

    Raises:
        DegenerateSample: If ten draws in a row are ill conditioned.
    """
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"Rank {rank} is not in [1, {dim}]")
    rng = np.random.default_rng(seed)
    for _ in range(DEFAULT_MAX_RESAMPLES):
        g = _gaussian(rng, (dim, rank))
        if condition_number(dagger(g) @ g) > DEFAULT_MAX_CONDITION:
            continue
        mat = g @ dagger(g)
        return DensityMatrix(mat, normalize=True)
    raise DegenerateSample("Could not draw a well-conditioned state")


def random_projective(
    dim: int, block_dims: Sequence[int], seed: SeedLike = None
) -> ProjectiveMeasurement:
    """Projectors onto consecutive column groups of a random unitary."""
    if sum(block_dims) != dim or min(block_dims) < 1:
        raise ValueError(
            f"Block dimensions {list(block_dims)} do not partition {dim}"
        )
    unitary = random_unitary(dim, seed)
    projectors = []
    start = 0
    for size in block_dims:
        columns = unitary[:, start:start + size]
        projectors.append(hermitian_part(columns @ dagger(columns)))
        start += size
    return ProjectiveMeasurement(projectors)


def random_povm(dim: int, n: int, seed: SeedLike = None) -> Povm:
    """
    A random POVM with Kraus operators A_i = B_i S^{-1/2},
    S = sum_i B_i^dagger B_i, for Gaussian B_i.

    Raises:
        DegenerateSample: If S is ill conditioned in ten draws.
    """
    if n < 1:
        raise ValueError("A POVM needs at least one outcome")
    rng = np.random.default_rng(seed)
    for _ in range(DEFAULT_MAX_RESAMPLES):
        seeds = [_gaussian(rng, (dim, dim)) for _ in range(n)]
        total = hermitian_part(sum(dagger(b) @ b for b in seeds))
        if condition_number(total) > DEFAULT_MAX_CONDITION:
            continue
        normalizer = inverse_sqrt(total)
        kraus = [b @ normalizer for b in seeds]
        return Povm.from_kraus(kraus)
    raise DegenerateSample("Could not draw a well-conditioned POVM")


def random_block_incoherent(
    p: ProjectiveMeasurement, rank: int | None = None, seed: SeedLike = None
) -> DensityMatrix:
    """Block dephasing of a random state."""
    return block_dephase(random_density(p.dim, rank, seed), p)


def _layers(index_map: Sequence[int]) -> List[List[int]]:
    """
    Split the inputs of an index map into layers on which it is injective.

    Layer t holds the t-th source block of every fibre f^{-1}(k).
    """
    fibres: dict[int, List[int]] = {}
    for source, target in enumerate(index_map):
        fibres.setdefault(target, []).append(source)
    depth = max(len(fibre) for fibre in fibres.values())
    return [
        sorted(fibre[t] for fibre in fibres.values() if len(fibre) > t)
        for t in range(depth)
    ]


def random_bi_channel(
    p: ProjectiveMeasurement,
    num_kraus: int,
    seed: SeedLike = None,
    index_maps: Sequence[Sequence[int]] | None = None,
    operators: Sequence | None = None,
) -> KrausChannel:
    """
    A random block-incoherent channel with Kraus operators of the form
    K = sum_i P_{f(i)} M P_i.

    Index maps are drawn uniformly from all n^n functions and M from a
    Gaussian ensemble, unless given explicitly. A map that is not injective
    is split into layers on which it is injective, so that
    S = sum K^dagger K is block diagonal; the operators are then normalized
    as K S^{-1/2}, which keeps their block form.

    Parameters:
        p (ProjectiveMeasurement): The block structure.
        num_kraus (int): Number of sampled (f, M) pairs.
        seed (SeedLike): RNG seed.
        index_maps (Sequence[Sequence[int]], optional): Explicit maps f_l.
        operators (Sequence[array-like], optional): Explicit matrices M_l.

    Returns:
        KrausChannel: A complete channel with its recorded block structure.

    Raises:
        DegenerateSample: If S stays singular after ten draws.
    """
    if num_kraus < 1:
        raise ValueError("num_kraus must be at least 1")
    rng = np.random.default_rng(seed)
    projectors = p.projectors
    fixed = index_maps is not None and operators is not None
    attempts = 1 if fixed else DEFAULT_MAX_RESAMPLES

    for _ in range(attempts):
        maps = (
            [tuple(int(k) for k in f) for f in index_maps]
            if index_maps is not None
            else [
                tuple(int(k) for k in rng.integers(0, p.n, size=p.n))
                for _ in range(num_kraus)
            ]
        )
        mats = (
            [as_cmatrix(m) for m in operators]
            if operators is not None
            else [_gaussian(rng, (p.dim, p.dim)) for _ in range(num_kraus)]
        )
        if len(maps) != num_kraus or len(mats) != num_kraus:
            raise ValueError("Need one index map and one operator per Kraus pair")

        pieces = []
        for index_map, mat in zip(maps, mats):
            for layer in _layers(index_map):
                layer_projector = sum(projectors[i] for i in layer)
                raw = sum(projectors[index_map[i]] @ mat @ projectors[i]
                          for i in layer)
                pieces.append((index_map, mat @ layer_projector, raw))

        total = hermitian_part(sum(dagger(raw) @ raw for _, _, raw in pieces))
        if condition_number(total) > DEFAULT_MAX_CONDITION:
            continue
        normalizer = inverse_sqrt(total)
        kraus = [raw @ normalizer for _, _, raw in pieces]
        structure = [
            BiStructure(index_map=index_map, operator=_frozen(mat @ normalizer))
            for index_map, mat, _ in pieces
        ]
        return KrausChannel(kraus, structure, p)

    raise DegenerateSample("Could not draw an invertible block-incoherent channel")


# --- channels ----------------------------------------------------------------

def dephasing_channel(p: ProjectiveMeasurement) -> KrausChannel:
    """The block dephasing channel with Kraus operators {P_i}."""
    structure = [
        BiStructure(
            index_map=tuple(range(p.n)),
            operator=_frozen(projector),
        )
        for projector in p.projectors
    ]
    return KrausChannel(p.projectors, structure, p)


def apply_channel(ch: KrausChannel, rho) -> DensityMatrix:
    """sum_l K_l rho K_l^dagger."""
    mat = state_matrix(rho)
    check_dim(mat, ch.dim, "state")
    out = sum(op @ mat @ dagger(op) for op in ch.kraus_ops)
    return DensityMatrix(hermitian_part(out))


def branches(
    ch: KrausChannel, rho, drop_below: float = DEFAULT_BRANCH_DROP
) -> List[BranchOutcome]:
    """
    Post-measurement branches (p_l, K_l rho K_l^dagger / p_l).

    Branches with p_l below ``drop_below`` are dropped.
    """
    mat = state_matrix(rho)
    check_dim(mat, ch.dim, "state")
    outcomes = []
    for op in ch.kraus_ops:
        unnormalized = op @ mat @ dagger(op)
        probability = float(np.trace(unnormalized).real)
        if probability < drop_below:
            continue
        outcomes.append(
            BranchOutcome(
                probability=probability,
                state=DensityMatrix(unnormalized, normalize=True),
            )
        )
    return outcomes


def mixture(weights: Sequence[float], states: Sequence) -> DensityMatrix:
    """Convex combination sum_j q_j rho_j."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("Mixture weights must form a probability vector")
    mat = sum(q * state_matrix(rho) for q, rho in zip(weights, states))
    return DensityMatrix(mat, normalize=True)


def direct_sum_state(
    p1: float, rho1, p2: float, rho2, partition: BlockPartition
) -> DensityMatrix:
    """
    The state p1 rho1 + p2 rho2, where rho1 lives on the first group of
    blocks and rho2 on the second one.

    Raises:
        SupportViolation: If p1 or p2 is not positive, they do not sum to 1,
          or a state leaks into the other group (tolerance 1e-9).
    """
    if p1 <= 0.0 or p2 <= 0.0 or abs(p1 + p2 - 1.0) > DEFAULT_SUPPORT_TOL:
        raise SupportViolation(
            f"Weights ({p1}, {p2}) are not a strictly positive distribution"
        )
    first = state_matrix(rho1)
    second = state_matrix(rho2)
    dim = partition.measurement.dim
    check_dim(first, dim, "state")
    check_dim(second, dim, "state")
    group_one = partition.projector(partition.first_group)
    group_two = partition.projector(partition.second_group)
    if np.linalg.norm(first @ group_two) > DEFAULT_SUPPORT_TOL:
        raise SupportViolation("First state leaks into the second group")
    if np.linalg.norm(second @ group_one) > DEFAULT_SUPPORT_TOL:
        raise SupportViolation("Second state leaks into the first group")
    return DensityMatrix(p1 * first + p2 * second, normalize=True)


# --- named instances -----------------------------------------------------------

def trine_povm() -> Povm:
    """Qubit trine POVM E_k = (2/3)|psi_k><psi_k| at 120 degree spacing."""
    effects = []
    for k in range(3):
        angle = 2.0 * np.pi * k / 3.0
        psi = np.array([np.cos(angle), np.sin(angle)])
        effects.append((2.0 / 3.0) * np.outer(psi, psi))
    return Povm(effects)


def plus_state(dim: int = 2) -> DensityMatrix:
    """The uniform superposition over the standard basis."""
    return DensityMatrix.pure(np.ones(dim))


# --- entropies and divergences ---------------------------------------------------

def von_neumann_entropy(rho) -> float:
    """S(rho) in bits."""
    return -entropy_term(state_matrix(rho))


def _support_projector(mat: np.ndarray, eig_floor: float) -> np.ndarray:
    return psd_power(mat, 0.0, eig_floor)


def tsallis_relative_entropy(
    rho, sigma, alpha: float, eig_floor: float = DEFAULT_EIG_FLOOR
) -> float:
    """
    D_T,alpha(rho||sigma) = [tr(rho^alpha sigma^{1-alpha}) - 1] / (alpha - 1).

    For alpha > 1 the value is +inf unless supp(rho) lies in supp(sigma).
    """
    if alpha <= 0.0 or alpha == 1.0:
        raise ValueError(f"Tsallis order must be positive and != 1, got {alpha}")
    first = state_matrix(rho)
    second = state_matrix(sigma)
    if alpha > 1.0:
        kernel = np.eye(second.shape[0]) - _support_projector(second, eig_floor)
        if np.linalg.norm(kernel @ first @ kernel) > DEFAULT_SUPPORT_TOL:
            return float("inf")
    overlap = np.trace(
        psd_power(first, alpha, eig_floor) @ psd_power(second, 1.0 - alpha, eig_floor)
    ).real
    return float((overlap - 1.0) / (alpha - 1.0))


def sandwiched_renyi_divergence(
    rho, sigma, alpha: float, eig_floor: float = DEFAULT_EIG_FLOOR
) -> float:
    """
    Sandwiched Renyi divergence in bits,
    log2 tr[(sigma^{(1-a)/2a} rho sigma^{(1-a)/2a})^a] / (a - 1).
    """
    if alpha <= 0.0 or alpha == 1.0:
        raise ValueError(f"Renyi order must be positive and != 1, got {alpha}")
    first = state_matrix(rho)
    second = state_matrix(sigma)
    if alpha > 1.0:
        kernel = np.eye(second.shape[0]) - _support_projector(second, eig_floor)
        if np.linalg.norm(kernel @ first @ kernel) > DEFAULT_SUPPORT_TOL:
            return float("inf")
    side = psd_power(second, (1.0 - alpha) / (2.0 * alpha), eig_floor)
    inner = hermitian_part(side @ first @ side)
    quasi = np.trace(psd_power(inner, alpha, eig_floor)).real
    if quasi <= 0.0:
        return float("inf")
    return float(np.log2(quasi) / (alpha - 1.0))


def fidelity(rho, sigma) -> float:
    """Root fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)) = ||sqrt(rho) sqrt(sigma)||_tr."""
    return trace_norm(psd_sqrt(state_matrix(rho)) @ psd_sqrt(state_matrix(sigma)))


def standard_l1_coherence(rho) -> float:
    """Basis l1 coherence sum_{i!=j} |rho_ij|."""
    mat = state_matrix(rho)
    return float(np.sum(np.abs(mat)) - np.sum(np.abs(np.diag(mat))))


def standard_rel_coherence(rho) -> float:
    """Basis relative entropy of coherence S(diag rho) - S(rho), in bits."""
    mat = state_matrix(rho)
    populations = np.clip(np.real(np.diag(mat)), 0.0, None)
    populations = populations[populations > 0.0]
    diagonal_entropy = -float(np.sum(populations * np.log2(populations)))
    return diagonal_entropy - von_neumann_entropy(mat)


def standard_tsallis_coherence(rho, alpha: float) -> float:
    """Basis Tsallis coherence [sum_i (<i|rho^alpha|i>)^{1/alpha} - 1] / (alpha - 1)."""
    if alpha <= 0.0 or alpha == 1.0:
        raise ValueError(f"Tsallis order must be positive and != 1, got {alpha}")
    populations = np.clip(np.real(np.diag(psd_power(state_matrix(rho), alpha))), 0.0, None)
    return float((np.sum(populations ** (1.0 / alpha)) - 1.0) / (alpha - 1.0))
