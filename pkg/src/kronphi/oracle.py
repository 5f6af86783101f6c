"""Brute-force references for small instances.

Everything here assembles dense ``N x N`` matrices and is meant for
validation only.  The phi-functions are summed from their power series,
which is a different route from the quadrature used by
:func:`kronphi.matfun.phiquad`, so agreement between the two means something.
"""
from __future__ import annotations

from math import factorial

import numpy as np

from .errors import OracleSizeError, SeriesConvergenceError, ShapeMismatchError
from .tensor import KroneckerSum

__all__ = ["assemble_kronsum", "phi_taylor_matrix", "phi_taylor_action", "MAX_DENSE_SIZE"]

MAX_DENSE_SIZE = 10_000
_SERIES_TOL = 1e-17
_SERIES_CAP = 200


def assemble_kronsum(K, max_size: int = MAX_DENSE_SIZE) -> np.ndarray:
    """Dense ``sum_mu I_d ⊗ ... ⊗ A_mu ⊗ ... ⊗ I_1``.

    Raises
    ------
    OracleSizeError
        If ``N = prod(n_mu)`` exceeds ``max_size``.
    """
    if not isinstance(K, KroneckerSum):
        K = KroneckerSum(K)
    N = K.size
    if N > max_size:
        raise OracleSizeError(f"refusing to assemble a {N} x {N} Kronecker sum (limit {max_size})")
    out = np.zeros((N, N), dtype=K.dtype)
    dims = K.dims
    for mu, A in enumerate(K.factors):
        left = int(np.prod(dims[mu + 1:], dtype=int))   # I_d ⊗ ... ⊗ I_{mu+1}
        right = int(np.prod(dims[:mu], dtype=int))      # I_{mu-1} ⊗ ... ⊗ I_1
        A = np.asarray(A.toarray() if hasattr(A, "toarray") else A)
        out += np.kron(np.eye(left), np.kron(A, np.eye(right)))
    return out


def _as_dense(M):
    if isinstance(M, KroneckerSum):
        return assemble_kronsum(M)
    M = np.asarray(M.toarray() if hasattr(M, "toarray") else M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeMismatchError(f"expected a square matrix, got shape {M.shape}")
    return M.astype(np.result_type(M, np.float64))


def _series_table(X, ell):
    # phi_0..phi_ell of X by their power series, ||X||_1 < 1/2 assumed
    n = X.shape[0]
    dtype = X.dtype
    eye = np.eye(n, dtype=dtype)
    table = []
    for j in range(ell + 1):
        total = eye / factorial(j)
        power = eye
        for i in range(1, _SERIES_CAP + 1):
            power = power @ X
            term = power / factorial(i + j)
            total = total + term
            if not np.all(np.isfinite(total)):
                raise SeriesConvergenceError(f"phi_{j} series overflowed after {i} terms")
            if np.abs(term).max() <= _SERIES_TOL * np.abs(total).max():
                break
        else:
            raise SeriesConvergenceError(f"phi_{j} series did not converge in {_SERIES_CAP} terms")
        table.append(total)
    return table


def phi_taylor_matrix(M, ell: int, extra_scaling: int = 0) -> np.ndarray:
    """Dense ``phi_ell(M)`` from the scaled power series and the doubling recurrence."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    M = _as_dense(M)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    nrm = float(np.abs(M).sum(axis=0).max()) if M.size else 0.0
    s = 0
    while nrm / 2.0**s >= 0.5:
        s += 1
    s += int(extra_scaling)
    table = _series_table(M / 2.0**s, ell)
    for _ in range(s):
        E = table[0]
        doubled = [E @ E]
        for l in range(1, ell + 1):
            acc = E @ table[l]
            for k in range(1, l + 1):
                acc = acc + table[k] / factorial(l - k)
            doubled.append(acc / 2.0**l)
        table = doubled
    return table[ell]


def phi_taylor_action(M, ell: int, v, extra_scaling: int = 0) -> np.ndarray:
    """Reference ``phi_ell(M) @ v``.

    ``M`` may be a dense matrix or a :class:`KroneckerSum` (assembled first).
    ``v`` may be a vector or a block of column vectors.
    """
    return phi_taylor_matrix(M, ell, extra_scaling) @ np.asarray(v)
