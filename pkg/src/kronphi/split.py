"""Direction-split phi-functions of a Kronecker sum.

For ``K = A_d ⊕ ... ⊕ A_1``,

    phi_l(tau K) v  ≈  vec( ((l!)^(d-1) V) ×_1 phi_l(tau A_1) ... ×_d phi_l(tau A_d) )

with an O(tau^2) error for ``l > 0`` and no error at all for ``l = 0``.
Only the small factor functions are ever formed; one Tucker operator
applies them.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Iterable

import numpy as np

from .matfun import GLLRule, expm, phiquad
from .tensor import KroneckerSum, tucker

__all__ = ["SplitPhi", "build_split_phi", "build_split_phis", "apply_split_phi"]


@dataclass(frozen=True)
class SplitPhi:
    ell: int
    tau: float
    factors: tuple
    prefactor: float

    @property
    def dims(self) -> tuple:
        return tuple(F.shape[0] for F in self.factors)

    def __call__(self, V) -> np.ndarray:
        return apply_split_phi(self, V)


def _dense(A):
    return np.asarray(A.toarray() if hasattr(A, "toarray") else A)


def build_split_phis(K, tau, ells: Iterable[int], rule: GLLRule | None = None,
                     prefactor_power=None) -> dict:
    """Build :class:`SplitPhi` objects for several orders at one step size.

    One :func:`phiquad` call per distinct factor yields every requested order.
    Factors that are the *same object* in ``K`` are evaluated once.

    ``prefactor_power`` overrides the exponent ``d - 1`` of ``l!`` (only
    useful to demonstrate that a wrong prefactor is detected).
    """
    if not isinstance(K, KroneckerSum):
        K = KroneckerSum(K)
    ells = sorted({int(l) for l in ells})
    if not ells or ells[0] < 0:
        raise ValueError(f"orders must be nonnegative, got {ells}")
    ell_max = ells[-1]
    power = K.d - 1 if prefactor_power is None else prefactor_power

    cache = {}
    tables = []
    for A in K.factors:
        key = id(A)
        if key not in cache:
            X = tau * _dense(A)
            if ell_max == 0:
                cache[key] = (expm(X),)
            else:
                cache[key] = phiquad(X, ell_max, rule=rule).phis
        tables.append(cache[key])

    return {
        l: SplitPhi(ell=l, tau=tau, factors=tuple(t[l] for t in tables),
                    prefactor=float(factorial(l)) ** power)
        for l in ells
    }


def build_split_phi(K, tau, ell: int, rule: GLLRule | None = None,
                    prefactor_power=None) -> SplitPhi:
    """Factors ``phi_ell(tau A_mu)`` and the prefactor ``(ell!)^(d-1)``."""
    return build_split_phis(K, tau, [ell], rule=rule, prefactor_power=prefactor_power)[ell]


def apply_split_phi(sp: SplitPhi, V) -> np.ndarray:
    """``((ell!)^(d-1) V) ×_1 F_1 ... ×_d F_d``."""
    V = np.asarray(V)
    if sp.prefactor != 1.0:
        V = sp.prefactor * V
    return tucker(V, sp.factors)
