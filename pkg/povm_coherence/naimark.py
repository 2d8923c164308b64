"""
Canonical Naimark extension of a POVM and the embedding map.

The joint space is H (x) H_R with Kronecker ordering system (x) register, so
the basis vector |s>|r> has index s * n + r. Register index 0 is the
distinguished ancilla start state.
"""
from dataclasses import dataclass
import hashlib
import logging
from typing import Dict, Sequence, Tuple

import numpy as np

from povm_coherence.decorators import measure_time
from povm_coherence.errors import CompletionFailure
from povm_coherence.matcore import dagger, hermitian_part, min_eigenvalue
from povm_coherence.quantum import (
    DensityMatrix,
    Povm,
    ProjectiveMeasurement,
    SeedLike,
    check_dim,
    state_matrix,
)


logger = logging.getLogger(__name__)

DEFAULT_UNITARITY_TOL = 1e-10
DEFAULT_ACCEPT_NORM = 1e-6
DEFAULT_FALLBACK_ATTEMPTS = 10
COMPLETIONS = ("standard", "random")


def register_measurement(d: int, n: int) -> ProjectiveMeasurement:
    """The register measurement {I_d (x) |i><i|} on H (x) H_R."""
    identity = np.eye(n)
    return ProjectiveMeasurement(
        [np.kron(np.eye(d), np.outer(identity[i], identity[i])) for i in range(n)]
    )


def lift_state(rho, n: int) -> np.ndarray:
    """rho (x) |0><0| on H (x) H_R."""
    start = np.zeros((n, n))
    start[0, 0] = 1.0
    return np.kron(state_matrix(rho), start)


def isometry(e: Povm) -> np.ndarray:
    """W = sum_i A_i (x) |i>, an (n d) x d isometry."""
    identity = np.eye(e.n)
    return sum(
        np.kron(op, identity[:, [i]]) for i, op in enumerate(e.kraus)
    )


def povm_digest(e: Povm) -> str:
    """SHA-256 of the Kraus family, used as a cache key."""
    h = hashlib.sha256()
    h.update(np.array([e.dim, e.n], dtype=np.int64).tobytes())
    for op in e.kraus:
        h.update(np.ascontiguousarray(op, dtype=complex).tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class EmbeddedOperator:
    """
    sum_ij A_i x A_j^dagger (x) |i><j| on H (x) H_R.

    Attributes:
        mat (np.ndarray): The (n d) x (n d) matrix.
        source_dim (int): d.
        n (int): Number of outcomes.
    """
    mat: np.ndarray
    source_dim: int
    n: int

    def as_state(self) -> DensityMatrix:
        return DensityMatrix(self.mat, normalize=True)


@dataclass(frozen=True)
class NaimarkExtension:
    """
    A unitary V on H (x) H_R with V (I (x) |0>) = W.

    Attributes:
        d (int): System dimension.
        n (int): Outcome count.
        v (np.ndarray): The unitary.
        blocks (Tuple[Tuple[np.ndarray, ...], ...]): A_ij = (I (x) <i|) V
          (I (x) |j>).
        pbar (ProjectiveMeasurement): Register measurement.
        dilated (ProjectiveMeasurement): {V^dagger Pbar_i V}.
        source (Povm): The extended POVM.
        completion (str): "standard" or "random".
    """
    d: int
    n: int
    v: np.ndarray
    blocks: Tuple[Tuple[np.ndarray, ...], ...]
    pbar: ProjectiveMeasurement
    dilated: ProjectiveMeasurement
    source: Povm
    completion: str = "standard"

    def block(self, i: int, j: int) -> np.ndarray:
        return self.blocks[i][j]

    def embed_via_unitary(self, x) -> np.ndarray:
        """V (x (x) |0><0|) V^dagger."""
        return self.v @ lift_state(x, self.n) @ dagger(self.v)

    def residuals(self, rhos: Sequence = ()) -> Dict[str, float]:
        """
        Invariant residuals of the extension.

        Parameters:
            rhos (Sequence, optional): States for the statistics and
              embedding identity checks.

        Returns:
            Dict[str, float]: unitarity, kraus_match, column_orthogonality,
              row_orthogonality, dilated_projector and, when states are
              given, statistics, embedding_identity and embedding_min_eig.
        """
        identity = np.eye(self.d)
        v_dag = dagger(self.v)
        report = {
            "unitarity": max(
                float(np.linalg.norm(v_dag @ self.v - np.eye(self.d * self.n))),
                float(np.linalg.norm(self.v @ v_dag - np.eye(self.d * self.n))),
            ),
            "kraus_match": max(
                float(np.linalg.norm(self.blocks[i][0] - self.source.kraus[i]))
                for i in range(self.n)
            ),
        }
        columns = 0.0
        rows = 0.0
        for j in range(self.n):
            for k in range(self.n):
                delta = identity if j == k else 0.0 * identity
                col_sum = sum(
                    dagger(self.blocks[i][j]) @ self.blocks[i][k]
                    for i in range(self.n)
                )
                row_sum = sum(
                    self.blocks[j][i] @ dagger(self.blocks[k][i])
                    for i in range(self.n)
                )
                columns = max(columns, float(np.linalg.norm(col_sum - delta)))
                rows = max(rows, float(np.linalg.norm(row_sum - delta)))
        report["column_orthogonality"] = columns
        report["row_orthogonality"] = rows
        report["dilated_projector"] = max(
            float(np.linalg.norm(pr @ pr - pr)) for pr in self.dilated.projectors
        )

        if len(rhos) > 0:
            statistics = 0.0
            identity_gap = 0.0
            lowest = np.inf
            for rho in rhos:
                mat = state_matrix(rho)
                lifted = lift_state(mat, self.n)
                for pr, effect in zip(self.dilated.projectors, self.source.effects):
                    statistics = max(
                        statistics,
                        abs(float(np.trace(pr @ lifted).real)
                            - float(np.trace(effect @ mat).real)),
                    )
                embedded = embed(mat, self.source).mat
                identity_gap = max(
                    identity_gap,
                    float(np.linalg.norm(embedded - self.embed_via_unitary(mat))),
                )
                lowest = min(lowest, min_eigenvalue(hermitian_part(embedded)))
            report["statistics"] = statistics
            report["embedding_identity"] = identity_gap
            report["embedding_min_eig"] = float(lowest)
        return report


def _phase_fixed(vector: np.ndarray) -> np.ndarray:
    """Rotate the phase so the largest-magnitude entry is real positive."""
    pivot = int(np.argmax(np.abs(vector)))
    return vector * (abs(vector[pivot]) / vector[pivot])


def _orthonormalize(
    basis: np.ndarray, candidate: np.ndarray
) -> np.ndarray | None:
    residual = candidate.astype(complex)
    # Two passes of classical Gram-Schmidt.
    for _ in range(2):
        residual = residual - basis @ (dagger(basis) @ residual)
    norm = float(np.linalg.norm(residual))
    if norm <= DEFAULT_ACCEPT_NORM:
        return None
    return _phase_fixed(residual / norm)


def _complete(
    w: np.ndarray, completion: str, seed: SeedLike
) -> np.ndarray:
    """Orthonormal columns spanning the complement of range(W)."""
    total = w.shape[0]
    needed = total - w.shape[1]
    basis = w.astype(complex)
    found = []

    def extend(candidates):
        nonlocal basis
        for candidate in candidates:
            if len(found) == needed:
                return
            vector = _orthonormalize(basis, candidate)
            if vector is not None:
                found.append(vector)
                basis = np.column_stack([basis, vector])

    rng = np.random.default_rng(seed)

    def gaussian_candidates():
        for _ in range(needed):
            yield rng.standard_normal(total) + 1j * rng.standard_normal(total)

    if completion == "standard":
        extend(np.eye(total)[:, k] for k in range(total))
    attempts = 0
    while len(found) < needed and attempts < DEFAULT_FALLBACK_ATTEMPTS:
        if completion == "standard":
            logger.info("Standard completion degenerate, using Gaussian candidates")
        extend(gaussian_candidates())
        attempts += 1
    if len(found) < needed:
        raise CompletionFailure(
            f"Found {len(found)} of {needed} completion vectors"
        )
    return np.column_stack(found) if found else np.zeros((total, 0), dtype=complex)


@measure_time
def build_extension(
    e: Povm, completion: str = "standard", seed: SeedLike = 0
) -> NaimarkExtension:
    """
    Build the canonical Naimark extension of a POVM.

    W = sum_i A_i (x) |i> fills the columns of V paired with register state
    |0>; the remaining (n - 1) d columns come from Gram-Schmidt of the
    standard basis in index order ("standard") or of seeded Gaussian
    vectors ("random"), each new vector phase-fixed so that its
    largest-magnitude entry is real positive.

    Parameters:
        e (Povm): The POVM.
        completion (str, optional): "standard" or "random".
        seed (SeedLike, optional): Seed for Gaussian candidates.

    Returns:
        NaimarkExtension: The extension with all invariants checked.

    Raises:
        ValueError: For an unknown completion.
        CompletionFailure: If no orthonormal completion is found or V is
          not unitary within 1e-10.
    """
    if completion not in COMPLETIONS:
        raise ValueError(f"completion must be one of {COMPLETIONS}")
    d, n = e.dim, e.n
    w = isometry(e)
    rest = iter(_complete(w, completion, seed).T)

    v = np.zeros((n * d, n * d), dtype=complex)
    for s in range(d):
        for r in range(n):
            v[:, s * n + r] = w[:, s] if r == 0 else next(rest)

    gap = float(np.linalg.norm(dagger(v) @ v - np.eye(n * d)))
    if gap > DEFAULT_UNITARITY_TOL * max(1.0, n * d):
        raise CompletionFailure(f"Completed V has unitarity residual {gap:.3e}")

    blocks = tuple(
        tuple(v[i::n, j::n].copy() for j in range(n)) for i in range(n)
    )
    for row in blocks:
        for block in row:
            block.setflags(write=False)
    pbar = register_measurement(d, n)
    v_dag = dagger(v)
    dilated = ProjectiveMeasurement(
        [hermitian_part(v_dag @ pr @ v) for pr in pbar.projectors]
    )
    v.setflags(write=False)
    logger.debug("Built %s Naimark extension, d=%d n=%d", completion, d, n)
    return NaimarkExtension(
        d=d,
        n=n,
        v=v,
        blocks=blocks,
        pbar=pbar,
        dilated=dilated,
        source=e,
        completion=completion,
    )


def embed(x, e: Povm) -> EmbeddedOperator:
    """
    The embedding sum_ij A_i x A_j^dagger (x) |i><j|, linear in x.

    Raises:
        DimMismatch: If x is not d x d.
    """
    mat = state_matrix(x)
    check_dim(mat, e.dim)
    w = isometry(e)
    out = w @ mat @ dagger(w)
    if np.allclose(mat, dagger(mat)):
        out = hermitian_part(out)
    return EmbeddedOperator(mat=out, source_dim=e.dim, n=e.n)
