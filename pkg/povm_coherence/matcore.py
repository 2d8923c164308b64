"""
Dense complex linear-algebra kernel.

Every function takes and returns plain ``numpy.ndarray`` objects of complex
dtype. Spectral results use descending eigenvalue order throughout, and
fractional powers and logarithms of positive semidefinite operators are
taken on the numerical support (eigenvalues above ``DEFAULT_EIG_FLOOR``
times the largest eigenvalue).
"""
from dataclasses import dataclass

import numpy as np

from povm_coherence.errors import NoConvergence, NotHermitian, NotPSD


DEFAULT_EIG_FLOOR = 1e-12
DEFAULT_HERMITIAN_TOL = 1e-10
DEFAULT_SYMMETRIZE_TOL = 1e-12
DEFAULT_PSD_TOL = 1e-8


@dataclass(frozen=True)
class EigenSystem:
    """
    Eigendecomposition of a Hermitian matrix.

    Attributes:
        eigenvalues (np.ndarray): Real eigenvalues in descending order.
        eigenvectors (np.ndarray): Unitary matrix whose columns pair with
          ``eigenvalues``.
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def rebuild(self) -> np.ndarray:
        """Return U diag(lambda) U^dagger."""
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def as_cmatrix(m) -> np.ndarray:
    """
    Convert the input to a finite two-dimensional complex array.

    Raises:
        ValueError: If the input is not two-dimensional or has non-finite
          entries.
    """
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"Expected a non-empty matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Matrix has NaN or infinite entries")
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


def hermiticity_residual(m: np.ndarray) -> float:
    """Frobenius norm of m - m^dagger."""
    return float(np.linalg.norm(m - dagger(m)))


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_HERMITIAN_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.linalg.norm(m)))
    return hermiticity_residual(m) <= tol * scale


def eigh(h) -> EigenSystem:
    """
    Hermitian eigendecomposition with eigenvalues sorted in descending order.

    A matrix whose Hermiticity residual lies between the symmetrization
    threshold and the acceptance threshold is replaced by its Hermitian part
    before decomposition.

    Parameters:
        h (array-like): A square matrix that is Hermitian within
          ``DEFAULT_HERMITIAN_TOL`` (relative to max(1, ||h||_F)).

    Returns:
        EigenSystem: Descending eigenvalues and the matching unitary.

    Raises:
        NotHermitian: If the Hermiticity residual is too large.
        NoConvergence: If LAPACK fails to converge.
    """
    h = as_cmatrix(h)
    if h.shape[0] != h.shape[1]:
        raise NotHermitian(f"Matrix of shape {h.shape} is not square")

    scale = max(1.0, float(np.linalg.norm(h)))
    residual = hermiticity_residual(h)
    if residual > DEFAULT_HERMITIAN_TOL * scale:
        raise NotHermitian(
            f"Hermiticity residual {residual:.3e} exceeds tolerance"
        )
    if residual > DEFAULT_SYMMETRIZE_TOL * scale:
        h = hermitian_part(h)

    try:
        values, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as error:
        raise NoConvergence(f"Eigendecomposition failed: {error}") from error

    order = np.arange(len(values))[::-1]
    return EigenSystem(
        eigenvalues=np.real(values[order]),
        eigenvectors=vectors[:, order],
    )


def eigvalsh(h) -> np.ndarray:
    """Descending eigenvalues of a Hermitian matrix."""
    return eigh(h).eigenvalues


def min_eigenvalue(h) -> float:
    return float(eigvalsh(h)[-1])


def trace_norm(m) -> float:
    """
    Sum of the singular values of m, i.e. tr sqrt(m^dagger m).

    Raises:
        NoConvergence: If the SVD fails to converge.
    """
    m = as_cmatrix(m)
    try:
        singular_values = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as error:
        raise NoConvergence(f"SVD failed: {error}") from error
    return float(np.sum(singular_values))


def _support_spectrum(
    h, eig_floor: float
) -> tuple[EigenSystem, np.ndarray]:
    """
    Decompose a PSD matrix and flag the eigenvalues that form its support.

    Raises:
        NotPSD: If the smallest eigenvalue is below -DEFAULT_PSD_TOL (scaled
          by max(1, largest eigenvalue)).
    """
    system = eigh(h)
    values = system.eigenvalues
    largest = max(float(values[0]), 0.0)
    if values[-1] < -DEFAULT_PSD_TOL * max(1.0, largest):
        raise NotPSD(f"Minimum eigenvalue {values[-1]:.3e} is negative")
    if largest == 0.0:
        return system, np.zeros(len(values), dtype=bool)
    return system, values > eig_floor * largest


def _spectral_apply(system: EigenSystem, values: np.ndarray) -> np.ndarray:
    u = system.eigenvectors
    return hermitian_part((u * values) @ u.conj().T)


def psd_power(h, t: float, eig_floor: float = DEFAULT_EIG_FLOOR) -> np.ndarray:
    """
    Fractional power of a positive semidefinite matrix on its support.

    Eigenvalues below ``eig_floor`` times the largest eigenvalue map to 0 for
    every exponent, negative ones included.

    Parameters:
        h (array-like): PSD matrix.
        t (float): Finite exponent.
        eig_floor (float, optional): Relative support threshold.

    Returns:
        np.ndarray: The Hermitian PSD matrix h^t.

    Raises:
        NotPSD: If h has a clearly negative eigenvalue.
    """
    if not np.isfinite(t):
        raise ValueError(f"Exponent must be finite, got {t}")
    system, support = _support_spectrum(h, eig_floor)
    powered = np.zeros(len(support))
    powered[support] = system.eigenvalues[support] ** t
    return _spectral_apply(system, powered)


def psd_sqrt(h, eig_floor: float = DEFAULT_EIG_FLOOR) -> np.ndarray:
    return psd_power(h, 0.5, eig_floor)


def inverse_sqrt(h, eig_floor: float = DEFAULT_EIG_FLOOR) -> np.ndarray:
    """Pseudo-inverse square root h^{-1/2} on the support of h."""
    return psd_power(h, -0.5, eig_floor)


def psd_log2(h, eig_floor: float = DEFAULT_EIG_FLOOR) -> np.ndarray:
    """
    Base-2 logarithm of a PSD matrix, computed on its support.

    Eigenvalues outside the support contribute 0, so tr(h log2 h) follows
    the 0 log 0 = 0 convention.
    """
    system, support = _support_spectrum(h, eig_floor)
    logged = np.zeros(len(support))
    logged[support] = np.log2(system.eigenvalues[support])
    return _spectral_apply(system, logged)


def entropy_term(h, eig_floor: float = DEFAULT_EIG_FLOOR) -> float:
    """tr(h log2 h) with the 0 log 0 = 0 convention."""
    system, support = _support_spectrum(h, eig_floor)
    values = system.eigenvalues[support]
    return float(np.sum(values * np.log2(values)))


def condition_number(h) -> float:
    """Ratio of extreme eigenvalues of a PSD matrix (inf when singular)."""
    values = eigvalsh(h)
    if values[-1] <= 0.0:
        return float("inf")
    return float(values[0] / values[-1])
