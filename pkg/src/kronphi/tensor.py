"""Dense order-d tensors, mu-mode products and Kronecker-sum actions.

A tensor is a plain :class:`numpy.ndarray` of shape ``(n_1, ..., n_d)``.
The linearization is column-major (``i_1`` varies fastest), so ``vec`` is
``ravel(order="F")`` and the Kronecker ordering is ``M_d ⊗ ... ⊗ M_1``.

Mode indices ``mu`` are 1-based, as in ``T ×_mu M``.

All kernels work on the C-ordered view of an F-ordered array, which has the
dimensions reversed.  Grouping that view as ``(L, n_mu, R)`` turns the
mu-mode product into a single (batched) GEMM without any transposition:

* ``mu = 1``:  ``(L, n_1) @ M^T``
* ``mu = d``:  ``M @ (n_d, R)``
* otherwise:  ``M @ (L, n_mu, R)`` broadcast over ``L``.
"""
from __future__ import annotations

from math import prod
from typing import Sequence

import numpy as np
import scipy.sparse

from .errors import ShapeMismatchError

__all__ = [
    "KroneckerSum",
    "vec",
    "unvec",
    "mode_product",
    "tucker",
    "kronsum_action",
]


def vec(T: np.ndarray) -> np.ndarray:
    """Stack the entries of ``T`` with the first index varying fastest."""
    return np.asarray(T).ravel(order="F")


def unvec(v: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`vec`: reshape ``v`` to ``dims`` in column-major order."""
    v = np.asarray(v)
    dims = tuple(int(n) for n in dims)
    if v.size != prod(dims):
        raise ShapeMismatchError(f"cannot unvec {v.size} entries into dims {dims}")
    return v.reshape(dims, order="F")


def _as_tensor(T) -> np.ndarray:
    T = np.asarray(T)
    if T.ndim == 0:
        raise ShapeMismatchError("tensor must have at least one mode")
    return np.asfortranarray(T)


def _result_dtype(*arrays):
    return np.result_type(*arrays, np.float64)


def _mode_product(T: np.ndarray, M: np.ndarray, k: int) -> np.ndarray:
    # T is F-contiguous, k is 0-based; no validation here.
    dims = T.shape
    n = dims[k]
    m = M.shape[0]
    R = prod(dims[:k])
    L = prod(dims[k + 1:])
    W = T.T  # C-contiguous view, dims reversed
    if scipy.sparse.issparse(M):
        return _sparse_mode_product(W, M, dims, k, L, n, R)
    if R == 1:
        out = W.reshape(L, n) @ M.T
    elif L == 1:
        out = M @ W.reshape(n, R)
    else:
        out = np.matmul(M, W.reshape(L, n, R))
    new_dims = dims[:k] + (m,) + dims[k + 1:]
    return out.reshape(new_dims[::-1]).T


def _sparse_mode_product(W, M, dims, k, L, n, R):
    m = M.shape[0]
    if R == 1:
        out = (M @ W.reshape(L, n).T).T
    elif L == 1:
        out = M @ W.reshape(n, R)
    else:
        W3 = W.reshape(L, n, R)
        out = np.stack([M @ W3[l] for l in range(L)])
    new_dims = dims[:k] + (m,) + dims[k + 1:]
    return np.asarray(out).reshape(new_dims[::-1]).T


def mode_product(T, M, mu: int) -> np.ndarray:
    """Return ``T ×_mu M``, contracting index ``mu`` of ``T`` with the columns of ``M``.

    ``M`` may be rectangular (the result has ``n_mu`` replaced by
    ``M.shape[0]``) and may be a :mod:`scipy.sparse` matrix.

    Raises
    ------
    ShapeMismatchError
        If ``M.shape[1] != T.shape[mu - 1]`` or ``mu`` is out of range.
    """
    T = _as_tensor(T)
    if not scipy.sparse.issparse(M):
        M = np.asarray(M)
    d = T.ndim
    if not 1 <= mu <= d:
        raise ShapeMismatchError(f"mode {mu} out of range for an order-{d} tensor")
    if M.ndim != 2 or M.shape[1] != T.shape[mu - 1]:
        raise ShapeMismatchError(
            f"mode {mu}: matrix of shape {M.shape} cannot act on dimension {T.shape[mu - 1]}"
        )
    return _mode_product(T, M, mu - 1)


def tucker(T, Ms: Sequence) -> np.ndarray:
    """Tucker operator ``T ×_1 M_1 ×_2 ... ×_d M_d``.

    Equivalent to ``unvec((M_d ⊗ ... ⊗ M_1) vec(T))``.  For ``d = 2`` this is
    ``M_1 @ T @ M_2.T``.
    """
    T = _as_tensor(T)
    if len(Ms) != T.ndim:
        raise ShapeMismatchError(f"need {T.ndim} factor matrices, got {len(Ms)}")
    out = T
    for mu, M in enumerate(Ms, start=1):
        out = mode_product(out, M, mu)
    return out


class KroneckerSum:
    """The matrix ``A_d ⊕ ... ⊕ A_1``, kept as its list of square factors.

    Never assembled; use :func:`kronphi.oracle.assemble_kronsum` for a dense copy.
    """

    def __init__(self, factors: Sequence):
        if len(factors) == 0:
            raise ShapeMismatchError("a Kronecker sum needs at least one factor")
        fs = []
        for mu, A in enumerate(factors, start=1):
            if not scipy.sparse.issparse(A):
                A = np.asarray(A)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise ShapeMismatchError(f"factor {mu} must be square, got shape {A.shape}")
            fs.append(A)
        self.factors = tuple(fs)

    @property
    def dims(self) -> tuple:
        return tuple(A.shape[0] for A in self.factors)

    @property
    def d(self) -> int:
        return len(self.factors)

    @property
    def size(self) -> int:
        return prod(self.dims)

    @property
    def dtype(self):
        return _result_dtype(*(A.dtype for A in self.factors))

    def __len__(self):
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __getitem__(self, i):
        return self.factors[i]

    def scaled(self, c) -> "KroneckerSum":
        """``c * K``, which is the Kronecker sum of the scaled factors."""
        return KroneckerSum([c * A for A in self.factors])

    def __call__(self, T) -> np.ndarray:
        return kronsum_action(T, self)

    def __repr__(self):
        return f"KroneckerSum(dims={self.dims})"


def kronsum_action(T, K) -> np.ndarray:
    """Apply a Kronecker sum to a tensor: ``sum_mu T ×_mu A_mu``, matrix-free."""
    T = _as_tensor(T)
    if not isinstance(K, KroneckerSum):
        K = KroneckerSum(K)
    if K.dims != T.shape:
        raise ShapeMismatchError(f"Kronecker sum of dims {K.dims} cannot act on tensor {T.shape}")
    out = _mode_product(T, K.factors[0], 0)
    for k in range(1, K.d):
        out = out + _mode_product(T, K.factors[k], k)
    return np.asfortranarray(out)
