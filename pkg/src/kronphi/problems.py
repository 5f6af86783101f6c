"""Benchmark problems in Kronecker form.

* a 3D advection-diffusion-reaction equation on the unit cube with a
  manufactured source, so that ``e^t u_0`` is the exact solution;
* the 2D LQR Riccati differential equation ``U' = A^T U + U A + C + U B U``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .errors import ShapeMismatchError
from .integrators import ProblemSpec
from .tensor import KroneckerSum

__all__ = [
    "ADR_EPS",
    "ADR_ALPHA",
    "fd_grid",
    "fd_operator_1d",
    "ADRProblem",
    "build_adr",
    "RiccatiProblem",
    "build_riccati",
    "riccati_rhs",
    "riccati_nonlinearity",
    "riccati_jacobian_factors",
    "are_residual",
]

ADR_EPS = 0.75
ADR_ALPHA = 0.1
ADR_FINAL_TIME = 1.0

RICCATI_ALPHA = 100.0
RICCATI_FINAL_TIME = 0.025


def fd_grid(n: int) -> np.ndarray:
    """Inner points ``i / (n + 1)``, ``i = 1..n``, of a uniform grid on [0, 1]."""
    return np.arange(1, n + 1) / (n + 1)


def _tridiag(sub, diag, sup):
    n = len(diag)
    A = np.diag(np.asarray(diag, dtype=float))
    if n > 1:
        A[np.arange(1, n), np.arange(n - 1)] = sub
        A[np.arange(n - 1), np.arange(1, n)] = sup
    return A


def fd_operator_1d(n: int, eps: float, alpha: float) -> np.ndarray:
    """Centered differences for ``eps d_xx + alpha d_x`` with homogeneous Dirichlet data.

    Row stencil ``(eps/h^2 - alpha/(2h), -2 eps/h^2, eps/h^2 + alpha/(2h))``,
    ``h = 1/(n+1)``.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"need at least one inner point, got n={n}")
    h = 1.0 / (n + 1)
    diff = eps / h**2
    adv = alpha / (2.0 * h)
    return _tridiag(np.full(n - 1, diff - adv), np.full(n, -2.0 * diff), np.full(n - 1, diff + adv))


def _variable_advection_operator(n: int, coef) -> np.ndarray:
    # d_xx + coef(x) d_x with the coefficient sampled at the row's node
    h = 1.0 / (n + 1)
    x = fd_grid(n)
    a = coef(x) / (2.0 * h)
    diff = 1.0 / h**2
    return _tridiag(diff - a[1:], np.full(n, -2.0 * diff), diff + a[:-1])


def _outer(*vectors) -> np.ndarray:
    out = vectors[0]
    for v in vectors[1:]:
        out = np.multiply.outer(out, v)
    return np.asfortranarray(out)


@dataclass
class ADRProblem:
    """Semidiscrete ADR problem; all tensors are sampled at the inner grid points."""

    dims: tuple
    factors: tuple
    eps: float
    alpha: float
    grids: tuple
    u0: np.ndarray
    final_time: float = ADR_FINAL_TIME
    # e^{-t} * (d/dt - eps*Laplace - alpha*div)(e^t u0), time independent
    _linear_source: np.ndarray = field(default=None, repr=False)
    _u0_sq: np.ndarray = field(default=None, repr=False)
    _psi_cache: dict = field(default_factory=dict, repr=False)

    @property
    def K(self) -> KroneckerSum:
        return KroneckerSum(self.factors)

    def exact(self, t: float) -> np.ndarray:
        return np.exp(t) * self.u0

    def source(self, t: float) -> np.ndarray:
        """The manufactured term Psi(t, x) at the grid points."""
        t = float(t)
        psi = self._psi_cache.get(t)
        if psi is None:
            psi = np.exp(t) * self._linear_source - 1.0 / (1.0 + np.exp(2.0 * t) * self._u0_sq)
            if len(self._psi_cache) >= 4:
                self._psi_cache.pop(next(iter(self._psi_cache)))
            self._psi_cache[t] = psi
        return psi

    def g(self, t: float, U: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + U * U) + self.source(t)

    def spec(self) -> ProblemSpec:
        return ProblemSpec(K=self.K, g=self.g, U0=self.u0.copy(), t0=0.0, T=self.final_time,
                           exact=self.exact, name="adr")


def build_adr(n1: int, n2: int, n3: int, eps: float = ADR_EPS, alpha: float = ADR_ALPHA,
              final_time: float = ADR_FINAL_TIME) -> ADRProblem:
    """ADR equation with ``u_0 = 64 x1(1-x1) x2(1-x2) x3(1-x3)`` and exact solution ``e^t u_0``.

    ``u_0`` is quadratic in each direction, so the centered differences are
    exact on it and the sampled exact solution also solves the semidiscrete
    system.
    """
    dims = (int(n1), int(n2), int(n3))
    if min(dims) < 1:
        raise ValueError(f"grid sizes must be positive, got {dims}")
    grids = tuple(fd_grid(n) for n in dims)
    factors = tuple(fd_operator_1d(n, eps, alpha) for n in dims)

    p = [x * (1.0 - x) for x in grids]
    dp = [1.0 - 2.0 * x for x in grids]
    ddp = [np.full_like(x, -2.0) for x in grids]
    u0 = 64.0 * _outer(*p)
    laplace = 64.0 * sum(_outer(*[ddp[m] if m == k else p[m] for m in range(3)]) for k in range(3))
    div = 64.0 * sum(_outer(*[dp[m] if m == k else p[m] for m in range(3)]) for k in range(3))
    linear = np.asfortranarray(u0 - eps * laplace - alpha * div)
    return ADRProblem(dims=dims, factors=factors, eps=eps, alpha=alpha, grids=grids, u0=u0,
                      final_time=final_time, _linear_source=linear,
                      _u0_sq=np.asfortranarray(u0 * u0))


@dataclass
class RiccatiProblem:
    """``U' = A^T U + U A + C + U B U``, ``U(0) = 0``, with ``B = -b b^T`` and ``C = alpha c^T c``.

    ``A`` is kept sparse (``n_hat^2 x n_hat^2``).
    """

    n_hat: int
    A: scipy.sparse.csr_matrix
    b: np.ndarray
    c: np.ndarray
    alpha: float
    final_time: float = RICCATI_FINAL_TIME

    def __post_init__(self):
        self.At = self.A.T.tocsr()
        self.C = self.alpha * np.outer(self.c, self.c)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def B(self) -> np.ndarray:
        return -np.outer(self.b, self.b)

    @property
    def U0(self) -> np.ndarray:
        return np.zeros((self.n, self.n), order="F")

    @property
    def K(self) -> KroneckerSum:
        # the same object in both modes: phi-functions of it are formed once
        return KroneckerSum([self.At, self.At])

    def g(self, t, U) -> np.ndarray:
        return riccati_nonlinearity(U, self)

    def jacobian_factors(self, U) -> list:
        return riccati_jacobian_factors(U, self)

    def spec(self) -> ProblemSpec:
        return ProblemSpec(K=self.K, g=self.g, U0=self.U0, t0=0.0, T=self.final_time,
                           jacobian_factors=self.jacobian_factors, name="riccati")


def build_riccati(n_hat: int, alpha: float = RICCATI_ALPHA,
                  final_time: float = RICCATI_FINAL_TIME) -> RiccatiProblem:
    """LQR Riccati problem on an ``n_hat x n_hat`` inner grid of the unit square.

    ``A`` discretizes ``d_xx + d_yy - 10 x d_x - 100 y d_y`` as
    ``I ⊗ D_1 + D_2 ⊗ I`` with the x index running fastest.  ``b_k`` and
    ``c_k`` are indicators of ``0.1 < x_i <= 0.3`` and ``0.7 < x_i <= 0.9``.
    """
    n_hat = int(n_hat)
    if n_hat < 2:
        raise ValueError(f"n_hat must be at least 2, got {n_hat}")
    D1 = _variable_advection_operator(n_hat, lambda x: -10.0 * x)
    D2 = _variable_advection_operator(n_hat, lambda y: -100.0 * y)
    eye = scipy.sparse.identity(n_hat, format="csr")
    A = (scipy.sparse.kron(eye, scipy.sparse.csr_matrix(D1))
         + scipy.sparse.kron(scipy.sparse.csr_matrix(D2), eye)).tocsr()
    x = fd_grid(n_hat)
    bx = ((x > 0.1) & (x <= 0.3)).astype(float)
    cx = ((x > 0.7) & (x <= 0.9)).astype(float)
    ones = np.ones(n_hat)
    b = np.kron(ones, bx)   # k = i + (j-1) n_hat
    c = np.kron(ones, cx)
    return RiccatiProblem(n_hat=n_hat, A=A, b=b, c=c, alpha=float(alpha), final_time=final_time)


def _check_size(U, p):
    U = np.asarray(U)
    if U.shape != (p.n, p.n):
        raise ShapeMismatchError(f"expected a {p.n} x {p.n} matrix, got {U.shape}")
    return U


def riccati_nonlinearity(U, p: RiccatiProblem) -> np.ndarray:
    """``C + U B U``, using ``B = -b b^T``."""
    U = _check_size(U, p)
    return np.asfortranarray(p.C - np.outer(U @ p.b, p.b @ U))


def riccati_rhs(U, p: RiccatiProblem) -> np.ndarray:
    """``A^T U + U A + C + U B U``."""
    U = _check_size(U, p)
    AtU = p.At @ U
    UA = (p.At @ U.T).T
    return AtU + UA + riccati_nonlinearity(U, p)


def riccati_jacobian_factors(U, p: RiccatiProblem, sym_tol: float = 1e-10) -> list:
    """Kronecker-sum factors of the Jacobian at ``U``: ``[A^T + U B, (A + B U)^T]``.

    For symmetric ``U`` both are the same matrix and it is returned twice (the
    same object), so downstream phi-functions are computed once.  A
    noticeably asymmetric ``U`` triggers a warning and two separate factors.
    """
    U = _check_size(U, p)
    Ub = U @ p.b
    J1 = p.At.toarray() - np.outer(Ub, p.b)
    scale = np.linalg.norm(U)
    if scale == 0.0 or np.linalg.norm(U - U.T) <= sym_tol * scale:
        return [J1, J1]
    warnings.warn("Riccati state is not symmetric; computing both Jacobian factors",
                  RuntimeWarning, stacklevel=2)
    J2 = p.At.toarray() - np.outer(U.T @ p.b, p.b)
    return [J1, J2]


def are_residual(U, p: RiccatiProblem) -> float:
    """Frobenius norm of the algebraic Riccati residual ``A^T U + U A + C + U B U``."""
    return float(np.linalg.norm(riccati_rhs(U, p)))
