"""Constant-step exponential integrators in tensor form.

The problem is ``U' = K U + G(t, U)`` with ``K`` a Kronecker sum acting on
order-d tensors.  Every stepper is written against three kinds of operator
so the same code runs on both backends:

* ``expo(V)``  -- ``e^{tau K} V``
* ``phi_l(V)`` -- (an approximation of) ``phi_l(tau K) V``
* ``K(V)``     -- the Kronecker-sum action

With :attr:`Backend.SPLIT` the exponential is a Tucker operator with the
factors ``e^{tau A_mu}`` (exact), and the phi-actions are direction split.
With :attr:`Backend.ORACLE` all three are dense matrices on the assembled
``K``, which gives the textbook schemes on small problems.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .matfun import GLLRule, expm
from .oracle import assemble_kronsum, phi_taylor_matrix
from .split import build_split_phi, build_split_phis
from .tensor import KroneckerSum, tucker, unvec, vec

__all__ = [
    "Method",
    "Backend",
    "ProblemSpec",
    "StepperConfig",
    "IntegrationResult",
    "lawson_euler_step",
    "lawson2b_step",
    "exp_euler_step",
    "exp_euler_linear_split_step",
    "etd2rk_step",
    "rosenbrock_euler_step",
    "integrate",
    "METHOD_ORDER",
]


class Method(str, Enum):
    LAWSON_EULER = "lawson-euler"
    LAWSON2B = "lawson2b"
    EXP_EULER = "exp-euler"
    EXP_EULER_LINEAR_SPLIT = "exp-euler-linsplit"
    ETD2RK = "etd2rk"
    ROSENBROCK_EULER = "rosenbrock-euler"


class Backend(str, Enum):
    SPLIT = "split"
    ORACLE = "oracle"


METHOD_ORDER = {
    Method.LAWSON_EULER: 1,
    Method.LAWSON2B: 2,
    Method.EXP_EULER: 1,
    Method.EXP_EULER_LINEAR_SPLIT: 1,
    Method.ETD2RK: 2,
    Method.ROSENBROCK_EULER: 2,
}


@dataclass
class ProblemSpec:
    """``U' = K U + g(t, U)`` on ``[t0, T]`` with ``U(t0) = U0``.

    ``jacobian_factors(U)`` returns ``[J_1, ..., J_d]`` with
    ``K + dg/du (U) = J_d ⊕ ... ⊕ J_1``; only the Rosenbrock method needs it.
    """

    K: KroneckerSum
    g: Callable
    U0: np.ndarray
    t0: float = 0.0
    T: float = 1.0
    exact: Optional[Callable] = None
    jacobian_factors: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.K, KroneckerSum):
            self.K = KroneckerSum(self.K)
        self.U0 = np.asfortranarray(self.U0)
        if self.U0.shape != self.K.dims:
            raise ValueError(f"initial tensor {self.U0.shape} does not match K dims {self.K.dims}")


@dataclass(frozen=True)
class StepperConfig:
    method: Method
    n_steps: int
    backend: Backend = Backend.SPLIT
    sample_every: Optional[int] = None
    rule: Optional[GLLRule] = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "backend", Backend(self.backend))
        if int(self.n_steps) < 1:
            raise ValueError(f"n_steps must be positive, got {self.n_steps}")


@dataclass
class IntegrationResult:
    final: np.ndarray
    n_steps: int
    tau: float
    wallclock: float
    loop_wallclock: float
    setup_wallclock: float
    trajectory: list = field(default_factory=list)  # (step, t, U) triples


def _propagator(op):
    """A callable ``V -> op V`` from a callable or a list of Tucker factors."""
    if callable(op):
        return op
    factors = tuple(op)
    return lambda V: tucker(V, factors)


# --- single steps -----------------------------------------------------------


def lawson_euler_step(U, t, tau, g, exp_factors):
    """``(U + tau G(t, U)) ×_1 e^{tau A_1} ... ×_d e^{tau A_d}``."""
    expo = _propagator(exp_factors)
    return expo(U + tau * g(t, U))


def lawson2b_step(U, t, tau, g, exp_factors):
    expo = _propagator(exp_factors)
    G = g(t, U)
    U2 = expo(U + tau * G)
    return expo(U + (0.5 * tau) * G) + (0.5 * tau) * g(t + tau, U2)


def exp_euler_step(U, t, tau, g, K, phi1):
    """``U + tau phi_1(tau K) (K U + G(t, U))``."""
    return U + tau * phi1(K(U) + g(t, U))


def exp_euler_linear_split_step(U, t, tau, g, exp_factors, phi1):
    """``e^{tau K} U + tau phi_1(tau K) G(t, U)``; exact when ``G`` is constant."""
    expo = _propagator(exp_factors)
    return expo(U) + tau * phi1(g(t, U))


def etd2rk_step(U, t, tau, g, K, phi1, phi2):
    G = g(t, U)
    U2 = U + tau * phi1(K(U) + G)
    return U2 + tau * phi2(g(t + tau, U2) - G)


def rosenbrock_euler_step(U, t, tau, g, K, jacobian_factors, rule: GLLRule | None = None):
    """``U + tau phi_1(tau K_n) (K U + G(t, U))``, ``K_n = J_d ⊕ ... ⊕ J_1`` at ``U``.

    The split factors ``phi_1(tau J_mu(U))`` are rebuilt from
    ``jacobian_factors(U)`` on every call.
    """
    if jacobian_factors is None:
        raise ConfigurationError("the Rosenbrock-Euler method needs jacobian_factors")
    phi1 = build_split_phi(KroneckerSum(jacobian_factors(U)), tau, 1, rule=rule)
    return exp_euler_step(U, t, tau, g, K, phi1)


# --- backends ---------------------------------------------------------------


class _DenseOp:
    """Dense matrix acting on tensors through ``vec``."""

    def __init__(self, M, dims):
        self.M = M
        self.dims = dims

    def __call__(self, V):
        return np.asfortranarray(unvec(self.M @ vec(V), self.dims))


def _distinct_expm(K, tau):
    cache = {}
    out = []
    for A in K.factors:
        if id(A) not in cache:
            dense = A.toarray() if hasattr(A, "toarray") else A
            cache[id(A)] = expm(tau * dense)
        out.append(cache[id(A)])
    return out


def _build_operators(p: ProblemSpec, c: StepperConfig, tau: float) -> dict:
    m = c.method
    dims = p.K.dims
    ops = {}
    if c.backend is Backend.SPLIT:
        ops["K"] = p.K
        if m in (Method.LAWSON_EULER, Method.LAWSON2B, Method.EXP_EULER_LINEAR_SPLIT):
            factors = tuple(_distinct_expm(p.K, tau))
            ops["expo"] = lambda V: tucker(V, factors)
        if m in (Method.EXP_EULER, Method.EXP_EULER_LINEAR_SPLIT):
            ops["phi1"] = build_split_phi(p.K, tau, 1, rule=c.rule)
        elif m is Method.ETD2RK:
            sp = build_split_phis(p.K, tau, [1, 2], rule=c.rule)
            ops["phi1"], ops["phi2"] = sp[1], sp[2]
        elif m is Method.ROSENBROCK_EULER:
            rule = c.rule
            ops["phi1_at"] = lambda U: build_split_phi(KroneckerSum(p.jacobian_factors(U)), tau, 1,
                                                       rule=rule)
        return ops

    Kd = assemble_kronsum(p.K)
    ops["K"] = _DenseOp(Kd, dims)
    if m in (Method.LAWSON_EULER, Method.LAWSON2B, Method.EXP_EULER_LINEAR_SPLIT):
        ops["expo"] = _DenseOp(phi_taylor_matrix(tau * Kd, 0), dims)
    if m in (Method.EXP_EULER, Method.EXP_EULER_LINEAR_SPLIT, Method.ETD2RK):
        ops["phi1"] = _DenseOp(phi_taylor_matrix(tau * Kd, 1), dims)
    if m is Method.ETD2RK:
        ops["phi2"] = _DenseOp(phi_taylor_matrix(tau * Kd, 2), dims)
    if m is Method.ROSENBROCK_EULER:
        ops["phi1_at"] = lambda U: _DenseOp(
            phi_taylor_matrix(tau * assemble_kronsum(p.jacobian_factors(U)), 1), dims)
    return ops


def _stepper(method: Method, ops: dict, g, tau: float):
    K = ops["K"]
    if method is Method.LAWSON_EULER:
        return lambda U, t: lawson_euler_step(U, t, tau, g, ops["expo"])
    if method is Method.LAWSON2B:
        return lambda U, t: lawson2b_step(U, t, tau, g, ops["expo"])
    if method is Method.EXP_EULER:
        return lambda U, t: exp_euler_step(U, t, tau, g, K, ops["phi1"])
    if method is Method.EXP_EULER_LINEAR_SPLIT:
        return lambda U, t: exp_euler_linear_split_step(U, t, tau, g, ops["expo"], ops["phi1"])
    if method is Method.ETD2RK:
        return lambda U, t: etd2rk_step(U, t, tau, g, K, ops["phi1"], ops["phi2"])
    if method is Method.ROSENBROCK_EULER:
        phi1_at = ops["phi1_at"]
        return lambda U, t: exp_euler_step(U, t, tau, g, K, phi1_at(U))
    raise ConfigurationError(f"unknown method {method!r}")


def integrate(p: ProblemSpec, c: StepperConfig, observer: Callable | None = None) -> IntegrationResult:
    """Advance ``c.n_steps`` constant steps from ``p.t0`` to ``p.T``.

    Step-invariant factor matrices are built once before the loop (all
    methods except Rosenbrock-Euler, whose factors depend on the state).
    ``setup_wallclock`` covers that precomputation, ``loop_wallclock`` the
    time loop, and ``wallclock`` both.

    If ``c.sample_every`` is set, ``(step, t, U)`` is recorded at step 0 and
    every ``sample_every`` steps (and the last step).  With an ``observer``,
    ``observer(step, t, U)`` is called at those points and nothing is stored.

    Raises
    ------
    ConfigurationError
        Rosenbrock-Euler without ``p.jacobian_factors``.
    DivergenceError
        If the state becomes non-finite.
    """
    if c.method is Method.ROSENBROCK_EULER and p.jacobian_factors is None:
        raise ConfigurationError("the Rosenbrock-Euler method needs jacobian_factors")
    n = int(c.n_steps)
    tau = (p.T - p.t0) / n
    if not tau > 0:
        raise ValueError(f"step size must be positive, got {tau}")

    start = time.perf_counter()
    ops = _build_operators(p, c, tau)
    step = _stepper(c.method, ops, p.g, tau)
    setup = time.perf_counter() - start

    trajectory = []
    every = c.sample_every

    def record(k, t, U):
        if observer is not None:
            observer(k, t, U)
        else:
            trajectory.append((k, t, U.copy()))

    U = p.U0.copy(order="F")
    if every:
        record(0, p.t0, U)
    loop_start = time.perf_counter()
    for k in range(n):
        t = p.t0 + k * tau
        U = step(U, t)
        if not np.isfinite(U).all():
            raise DivergenceError(k + 1, t + tau)
        if every and ((k + 1) % every == 0 or k + 1 == n):
            record(k + 1, p.t0 + (k + 1) * tau, U)
    loop = time.perf_counter() - loop_start
    return IntegrationResult(final=U, n_steps=n, tau=tau, wallclock=setup + loop,
                             loop_wallclock=loop, setup_wallclock=setup, trajectory=trajectory)
