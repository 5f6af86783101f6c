"""Dense matrix exponential and phi-functions of small matrices.

``expm`` is the diagonal Padé scaling-and-squaring algorithm with the
degree selection of Higham (2005).  ``phiquad`` evaluates the whole family
``phi_0, ..., phi_l`` at once: a Gauss-Legendre-Lobatto rule on the integral
representation at a scaled argument, followed by the doubling recurrence

    phi_l(2z) = 2^-l [ e^z phi_l(z) + sum_{k=1}^{l} phi_k(z) / (l-k)! ].
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.linalg
import scipy.special

from .errors import ShapeMismatchError

__all__ = [
    "expm",
    "expm_multiples",
    "GLLRule",
    "gll_rule",
    "PhiTable",
    "phiquad",
    "phi_square_step",
    "DEFAULT_QUAD_NODES",
]

DEFAULT_QUAD_NODES = 12

# Padé numerator coefficients b_0..b_m and the 1-norm bounds below which
# degree m is accurate to unit roundoff (Higham 2005, Table 2.3).
_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _check_square(X, name="matrix") -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ShapeMismatchError(f"{name} must be square, got shape {X.shape}")
    if not np.issubdtype(X.dtype, np.inexact):
        X = X.astype(np.float64)
    return X


def _norm1(X) -> float:
    return float(np.abs(X).sum(axis=0).max()) if X.size else 0.0


def _pade_solve(U, V):
    return scipy.linalg.solve(V - U, V + U, overwrite_a=True, overwrite_b=True)


def _pade_low(X, m, powers=None, c=1.0):
    # r_m(cX) for m <= 9 from even powers X^2, X^4, ... of the *unscaled* X.
    b = _PADE_COEFFS[m]
    n = X.shape[0]
    eye = np.eye(n, dtype=X.dtype)
    if powers is None:
        powers = _even_powers(X, m)
    U = b[1] * eye
    V = b[0] * eye
    c2 = c * c
    ck = 1.0
    for k in range(1, m // 2 + 1):
        ck *= c2
        P = powers[k - 1]
        U = U + (b[2 * k + 1] * ck) * P
        V = V + (b[2 * k] * ck) * P
    U = (c * X) @ U
    return _pade_solve(U, V)


def _even_powers(X, m, have=()):
    powers = list(have)
    if not powers:
        powers.append(X @ X)
    while len(powers) < m // 2:
        powers.append(powers[-1] @ powers[0])
    return powers


def _pade13(X):
    b = _PADE_COEFFS[13]
    eye = np.eye(X.shape[0], dtype=X.dtype)
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    U = X @ (X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2)
             + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * eye)
    V = (X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2)
         + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * eye)
    return _pade_solve(U, V)


def expm(X) -> np.ndarray:
    """Matrix exponential by diagonal Padé approximation with scaling and squaring.

    Raises
    ------
    ShapeMismatchError
        If ``X`` is not square.
    ValueError
        If ``X`` has non-finite entries.
    """
    X = _check_square(X)
    if not np.all(np.isfinite(X)):
        raise ValueError("expm: matrix has non-finite entries")
    n = X.shape[0]
    if n == 0:
        return X.copy()
    nrm = _norm1(X)
    if nrm == 0.0:
        return np.eye(n, dtype=X.dtype)
    for m in (3, 5, 7, 9):
        if nrm <= _PADE_THETA[m]:
            return _pade_low(X, m)
    s = max(0, int(np.ceil(np.log2(nrm / _PADE_THETA[13]))))
    E = _pade13(X / 2.0**s)
    for _ in range(s):
        E = E @ E
    return E


def _taylor_degree(a: float) -> int:
    # smallest m with a^(m+1)/(m+1)! below half a unit roundoff
    m, term = 0, a
    while term > 2.0**-54:
        m += 1
        term *= a / (m + 1)
    return max(m, 1)


def expm_multiples(Y, cs) -> list:
    """``[expm(c * Y) for c in cs]`` for a batch of scalar multiples of one matrix.

    When every ``|c| * ||Y||_1 <= 1`` the exponentials are truncated Taylor
    polynomials built from one shared set of powers ``Y^k`` and combined with
    a single matrix product, so extra multiples cost almost nothing.  Larger
    arguments go through :func:`expm` one by one.
    """
    Y = _check_square(Y)
    n = Y.shape[0]
    cs = [float(c) for c in cs] if not np.iscomplexobj(cs) else list(cs)
    amax = max((abs(c) for c in cs), default=0.0) * _norm1(Y)
    if amax > 1.0:
        return [expm(c * Y) for c in cs]
    m = _taylor_degree(amax)
    powers = np.empty((m + 1, n, n), dtype=np.result_type(Y, *cs))
    powers[0] = np.eye(n)
    for k in range(1, m + 1):
        np.matmul(powers[k - 1], Y, out=powers[k])
    k = np.arange(m + 1)
    inv_fact = 1.0 / np.array([factorial(j) for j in range(m + 1)])
    coeffs = np.array([np.asarray(c) ** k * inv_fact for c in cs])
    combined = coeffs @ powers.reshape(m + 1, n * n)
    return list(combined.reshape(len(cs), n, n))


@dataclass(frozen=True)
class GLLRule:
    """Gauss-Legendre-Lobatto rule on ``[0, 1]``; ``nodes[0] = 0``, ``nodes[-1] = 1``."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def q(self) -> int:
        return len(self.nodes)


def gll_rule(q: int = DEFAULT_QUAD_NODES) -> GLLRule:
    """The ``q``-point Gauss-Legendre-Lobatto rule mapped to ``[0, 1]``.

    Exact for polynomials of degree ``2q - 3``.
    """
    q = int(q)
    if q < 2:
        raise ValueError(f"a Lobatto rule needs q >= 2 nodes, got {q}")
    # interior nodes are the zeros of P'_{q-1}, i.e. of the Jacobi P^{(1,1)}_{q-2}
    if q > 2:
        inner, _ = scipy.special.roots_jacobi(q - 2, 1.0, 1.0)
    else:
        inner = np.empty(0)
    x = np.concatenate(([-1.0], np.sort(inner), [1.0]))
    w = 2.0 / (q * (q - 1) * scipy.special.eval_legendre(q - 1, x) ** 2)
    # symmetrize against rounding in the computed roots
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return GLLRule(nodes=(x + 1.0) / 2.0, weights=w / 2.0)


@dataclass(frozen=True)
class PhiTable:
    """``phis[j] = phi_j(base)`` for ``j = 0..ell_max``.

    ``s`` is the number of doublings used to reach ``base`` from the point
    where the quadrature was applied.
    """

    base: np.ndarray
    phis: tuple
    s: int = 0

    @property
    def ell_max(self) -> int:
        return len(self.phis) - 1

    def __getitem__(self, ell):
        return self.phis[ell]

    def __len__(self):
        return len(self.phis)


def _scaling_exponent(nrm: float) -> int:
    s = 0
    while nrm / 2.0**s >= 1.0:
        s += 1
    return s


def phi_square_step(table: PhiTable) -> PhiTable:
    """Map a table at argument ``z`` to the table at ``2z``.

    Every new entry is built from the old (same-scale) entries only.
    """
    E = table.phis[0]
    new = [E @ E]
    for ell in range(1, table.ell_max + 1):
        acc = E @ table.phis[ell]
        for k in range(1, ell + 1):
            acc += table.phis[k] / factorial(ell - k)
        new.append(acc / 2.0**ell)
    return PhiTable(base=2.0 * table.base, phis=tuple(new), s=table.s)


def phiquad(X, ell_max: int, rule: GLLRule | None = None, extra_scaling: int = 0) -> PhiTable:
    """Compute ``phi_0(X), ..., phi_{ell_max}(X)`` jointly.

    ``X`` is scaled by ``2^s`` with ``s`` the smallest natural number giving
    ``||X / 2^s||_1 < 1`` (plus ``extra_scaling``).  At the scaled argument
    ``Y`` each ``phi_j`` is the Lobatto sum

        sum_i w_i exp((1 - theta_i) Y) theta_i^(j-1) / (j-1)!

    over one shared set of node exponentials (the node ``theta = 1`` is the
    identity and is not formed; the node ``theta = 0`` gives ``e^Y``).  The
    table is then doubled ``s`` times with :func:`phi_square_step`.

    Parameters
    ----------
    X : (n, n) array_like
    ell_max : int
        Highest order wanted; ``0`` reduces to :func:`expm`.
    rule : GLLRule, optional
        Defaults to ``gll_rule(DEFAULT_QUAD_NODES)``.
    extra_scaling : int
        Additional doublings beyond the minimum (for consistency checks).
    """
    X = _check_square(X)
    ell_max = int(ell_max)
    if ell_max < 0:
        raise ValueError(f"ell_max must be >= 0, got {ell_max}")
    if ell_max == 0:
        return PhiTable(base=X, phis=(expm(X),), s=0)
    if rule is None:
        rule = gll_rule(DEFAULT_QUAD_NODES)
    n = X.shape[0]
    s = _scaling_exponent(_norm1(X)) + int(extra_scaling)
    Y = X / 2.0**s
    theta, w = rule.nodes, rule.weights

    exps = expm_multiples(Y, [1.0 - th for th in theta[:-1]])
    phis = [exps[0]]
    for j in range(1, ell_max + 1):
        scale = 1.0 / factorial(j - 1)
        P = np.zeros((n, n), dtype=exps[0].dtype)
        for th, wi, E in zip(theta[:-1], w[:-1], exps):
            c = wi * th ** (j - 1) * scale
            if c != 0.0:
                P += c * E
        P[np.diag_indices(n)] += w[-1] * scale
        phis.append(P)
    del exps

    table = PhiTable(base=Y, phis=tuple(phis), s=s)
    for _ in range(s):
        table = phi_square_step(table)
    return PhiTable(base=X, phis=table.phis, s=s)
