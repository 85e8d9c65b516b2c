"""Dense float64 matrix helpers shared by the networks and the filter.

Everything is plain ``numpy.ndarray`` in 64-bit precision; the filter's
covariance arithmetic is too ill-conditioned for float32.
"""

import numpy as np

from .errors import NumericError

# Cholesky pivots below -PIVOT_TOL mean the input is not PSD; pivots in
# [-PIVOT_TOL, PIVOT_TOL] are treated as exactly zero (semidefinite direction).
PIVOT_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D float64 array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product with dimension and finiteness checks."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    out = a @ b
    if not np.all(np.isfinite(out)):
        raise NumericError("matrix product produced non-finite entries")
    return out


def matrix_sqrt_psd(m) -> np.ndarray:
    """Lower-triangular S with S @ S.T == m, for symmetric PSD m.

    Strictly positive-definite inputs go through LAPACK; semidefinite ones
    fall back to a pivot-tolerant Cholesky that zeroes columns whose pivot
    is within PIVOT_TOL of zero. A pivot below -PIVOT_TOL raises
    NumericError. Only the lower triangle of ``m`` is read.
    """
    m = as_matrix(m)
    n, nc = m.shape
    if n != nc:
        raise ValueError(f"matrix must be square, got {m.shape}")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pass
    s = np.zeros_like(m)
    for j in range(n):
        pivot = m[j, j] - s[j, :j] @ s[j, :j]
        if pivot < -PIVOT_TOL:
            raise NumericError(f"matrix is not PSD: pivot {pivot:.3e} at column {j}")
        if pivot > PIVOT_TOL:
            s[j, j] = np.sqrt(pivot)
            if j + 1 < n:
                s[j + 1:, j] = (m[j + 1:, j] - s[j + 1:, :j] @ s[j, :j]) / s[j, j]
        # pivot ~ 0: leave the column zero
    return s


def symmetrize(m: np.ndarray) -> np.ndarray:
    """(m + m.T) / 2 — rounding hygiene for covariance matrices."""
    return (m + m.T) * 0.5
