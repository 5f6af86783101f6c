"""Invariant suite behind ``bench selftest``.

Every check compares a fast kernel with an independent dense reference and
returns a :class:`Check` carrying the measured value.  The two optional
knobs degrade the build on purpose (fewer quadrature nodes, a wrong
splitting prefactor) and exist to show that the suite notices.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from math import factorial

import numpy as np

from .integrators import Backend, Method, StepperConfig, integrate
from .matfun import expm, gll_rule, phiquad
from .oracle import assemble_kronsum, phi_taylor_action, phi_taylor_matrix
from .problems import build_adr, build_riccati
from .split import build_split_phi
from .tensor import KroneckerSum, kronsum_action, tucker, vec

__all__ = ["Check", "run_selftest", "random_stable_factor", "fit_order",
           "splitting_errors", "backend_difference_orders", "recurrence_residual"]


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    limit: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<34} {self.value:.3e}  ({self.limit})"


def _rel(a, b) -> float:
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / (nb if nb > 0 else 1.0))


def random_stable_factor(rng, n: int) -> np.ndarray:
    """Random ``n x n`` matrix with all eigenvalues in ``Re z <= -1``."""
    A = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(A).real) + 1.0
    return A - shift * np.eye(n)


def fit_order(taus, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(tau)``."""
    return float(np.polyfit(np.log(taus), np.log(errors), 1)[0])


def splitting_errors(factors, ell, taus, v=None, rng=None, prefactor_power=None, rule=None):
    """Relative error of the split phi-action against the Taylor oracle for each ``tau``."""
    K = KroneckerSum(factors)
    if v is None:
        rng = rng or np.random.default_rng(0)
        v = rng.standard_normal(K.dims)
    v = np.asfortranarray(v)
    out = []
    for tau in taus:
        sp = build_split_phi(K, tau, ell, rule=rule, prefactor_power=prefactor_power)
        ref = phi_taylor_action(K.scaled(tau), ell, vec(v))
        out.append(_rel(vec(sp(v)), ref))
    return out


def backend_difference_orders(spec, method, steps):
    """Observed orders of ``||U_split - U_oracle||`` over a step sweep, plus the differences."""
    diffs, taus = [], []
    for n in steps:
        a = integrate(spec, StepperConfig(method, n, Backend.SPLIT))
        b = integrate(spec, StepperConfig(method, n, Backend.ORACLE))
        diffs.append(_rel(a.final, b.final))
        taus.append(a.tau)
    orders = [np.log(diffs[k - 1] / diffs[k]) / np.log(taus[k - 1] / taus[k])
              for k in range(1, len(diffs))]
    return orders, diffs


def recurrence_residual(X, table, k) -> float:
    """``||phi_k - X phi_{k+1} - I/k!||`` relative to the size of the two terms.

    Relative to ``||phi_k||`` the check is ill-conditioned when ``X`` has a
    strongly negative spectrum, since then ``phi_k`` is a small difference of
    O(1) quantities.
    """
    Xphi = X @ table[k + 1]
    eye = np.eye(X.shape[0]) / factorial(k)
    return float(np.linalg.norm(table[k] - Xphi - eye) / (np.linalg.norm(Xphi) + np.linalg.norm(eye)))


# --- individual checks --------------------------------------------------------


def check_tensor_kernels(rng, cases=50) -> Check:
    worst = 0.0
    for _ in range(cases):
        d = int(rng.integers(1, 5))
        dims = tuple(int(x) for x in rng.integers(1, 7, size=d))
        T = rng.standard_normal(dims)
        Ms = [rng.standard_normal((n, n)) for n in dims]
        kron = Ms[0]
        for M in Ms[1:]:
            kron = np.kron(M, kron)
        worst = max(worst, _rel(vec(tucker(T, Ms)), kron @ vec(T)))
        worst = max(worst, _rel(vec(kronsum_action(T, Ms)), assemble_kronsum(Ms) @ vec(T)))
    return Check("tucker/kronsum vs dense Kronecker", worst <= 1e-13, worst, "<= 1e-13")


def check_gll_exactness(q) -> Check:
    rule = gll_rule(q)
    worst = 0.0
    for k in range(2 * q - 2):
        worst = max(worst, abs(rule.weights @ rule.nodes**k - 1.0 / (k + 1)))
    return Check(f"GLL q={q} exact to degree {2 * q - 3}", worst <= 1e-14, worst, "<= 1e-14")


def check_expm(rng, cases=20) -> Check:
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 16))
        X = rng.standard_normal((n, n))
        X *= rng.uniform(0.01, 20.0) / np.abs(X).sum(axis=0).max()
        worst = max(worst, _rel(expm(X), phi_taylor_matrix(X, 0)))
    return Check("expm vs Taylor oracle", worst <= 1e-12, worst, "<= 1e-12")


def check_phiquad(rng, cases=30, q=None) -> tuple:
    rule = None if q is None else gll_rule(q)
    worst = worst_rec = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 31))
        X = rng.standard_normal((n, n))
        X *= rng.uniform(0.01, 50.0) / np.abs(X).sum(axis=0).max()
        table = phiquad(X, 3, rule=rule)
        v = rng.standard_normal(n)
        for ell in range(4):
            worst = max(worst, _rel(table[ell] @ v, phi_taylor_action(X, ell, v)))
        for k in range(3):
            worst_rec = max(worst_rec, recurrence_residual(X, table, k))
    label = "phiquad vs Taylor oracle" + ("" if q is None else f" (q={q})")
    return (Check(label, worst <= 1e-11, worst, "<= 1e-11"),
            Check("phi recurrence", worst_rec <= 1e-11, worst_rec, "<= 1e-11"))


def check_split_exact(rng) -> Check:
    worst = 0.0
    for d in (2, 3):
        factors = [random_stable_factor(rng, int(rng.integers(2, 7))) for _ in range(d)]
        worst = max(worst, max(splitting_errors(factors, 0, [0.5, 0.125], rng=rng)))
    return Check("split phi_0 exact", worst <= 1e-12, worst, "<= 1e-12")


def check_split_order(rng, prefactor_power=None) -> Check:
    taus = [2.0**-k for k in range(3, 10)]
    worst = None
    for ell in (1, 2):
        for d in (2, 3):
            factors = [random_stable_factor(rng, int(rng.integers(2, 7))) for _ in range(d)]
            p = fit_order(taus, splitting_errors(factors, ell, taus, rng=rng,
                                                 prefactor_power=prefactor_power))
            if worst is None or abs(p - 2.0) > abs(worst - 2.0):
                worst = p
    return Check("split phi_1, phi_2 order 2", abs(worst - 2.0) <= 0.1, worst, "2.0 +- 0.1")


def check_backends() -> list:
    spec = build_adr(5, 6, 6).spec()  # N = 180
    a = integrate(spec, StepperConfig(Method.LAWSON2B, 20, Backend.SPLIT)).final
    b = integrate(spec, StepperConfig(Method.LAWSON2B, 20, Backend.ORACLE)).final
    lawson = _rel(a, b)
    orders, _ = backend_difference_orders(spec, Method.ETD2RK, (10, 20, 40))
    p = min(orders)
    return [Check("Lawson split == oracle", lawson <= 1e-12, lawson, "<= 1e-12"),
            Check("ETD2RK split -> oracle order", p >= 2.0, p, ">= 2.0")]


def check_riccati_backends() -> Check:
    spec = build_riccati(3).spec()  # N = 81
    orders, _ = backend_difference_orders(spec, Method.ROSENBROCK_EULER, (10, 20, 40))
    p = min(orders)
    return Check("Rosenbrock split -> oracle order", p >= 2.0, p, ">= 2.0")


def run_selftest(quad_nodes=None, prefactor_power=None, seed=0, out=None) -> tuple:
    """Run every check, print one line each and return ``(all_passed, checks)``."""
    out = out or sys.stdout
    rng = np.random.default_rng(seed)
    checks = [check_tensor_kernels(rng), check_gll_exactness(quad_nodes or 12), check_expm(rng)]
    checks += check_phiquad(rng, q=quad_nodes)
    checks += [check_split_exact(rng), check_split_order(rng, prefactor_power)]
    checks += check_backends()
    checks.append(check_riccati_backends())
    for c in checks:
        print(c.line(), file=out)
    ok = all(c.passed for c in checks)
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed", file=out)
    return ok, checks
