"""Input validation helpers (complex-aware counterparts of sklearn's check_array)."""
import numpy as np

from .exceptions import DimensionMismatch, NonOrthonormal


def check_operator_matrix(m, dim=None):
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"operator matrix must be square, got shape {a.shape}")
    if a.shape[0] == 0:
        raise DimensionMismatch("operator matrix is empty")
    if dim is not None and a.shape[0] != dim:
        raise DimensionMismatch(f"expected a {dim}x{dim} matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator matrix contains NaN or infinity")
    return a


def check_vector(v, dim):
    a = np.asarray(v, dtype=complex)
    if a.shape[0] != dim:
        raise DimensionMismatch(f"vector of length {a.shape[0]} for a {dim}-dimensional section")
    return a


def check_orthonormal_columns(x, dim, tol=1e-10):
    a = np.array(x, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] != dim:
        raise DimensionMismatch(f"expected column vectors of length {dim}, got shape {a.shape}")
    if a.shape[1]:
        err = np.abs(a.conj().T @ a - np.eye(a.shape[1])).max()
        if err > tol:
            raise NonOrthonormal(f"vectors are not orthonormal (max Gram error {err:.2e})")
    return a
