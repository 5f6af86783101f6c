"""Convergence sweeps, steady-state tracking and CSV/table output."""
from __future__ import annotations

import csv
import hashlib
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .integrators import Backend, Method, StepperConfig, integrate
from .problems import are_residual, build_adr, build_riccati

log = logging.getLogger(__name__)

CSV_HEADER = ("problem", "method", "steps", "tau", "error", "order", "wallclock_s")

# default step sweeps per method
ADR_STEPS = {
    Method.LAWSON_EULER: (800, 8800, 16800, 24800, 32800),
    Method.EXP_EULER: (50, 450, 850, 1250, 1650),
    Method.LAWSON2B: (1500, 5500, 9500, 13500, 17500),
    Method.ETD2RK: (40, 140, 240, 340, 440),
}
ADR_STEPS_FINE_GRID = dict(ADR_STEPS)
ADR_STEPS_FINE_GRID[Method.LAWSON2B] = (3000, 4500, 6000, 7500, 9000)
RICCATI_STEPS = {
    Method.ROSENBROCK_EULER: (30, 65, 100, 135, 170),
    Method.ETD2RK: (30, 65, 100, 135, 170),
}
RICCATI_REFERENCE_STEPS = 4096
STEADY_FINAL_TIME = 0.15


@dataclass
class RunRecord:
    problem: str
    method: str
    steps: int
    tau: float
    error: float
    order: Optional[float]
    wallclock_s: float
    loop_s: float = math.nan

    def row(self, loop_time=False) -> list:
        r = [self.problem, self.method, self.steps, _fmt(self.tau), _fmt(self.error),
             "" if self.order is None else _fmt(self.order), _fmt(self.wallclock_s)]
        if loop_time:
            r.append(_fmt(self.loop_s))
        return r


def _fmt(x) -> str:
    return f"{x:.17g}"


def observed_order(errors: Sequence[float], taus: Sequence[float]) -> list:
    """``p_k = log(e_{k-1}/e_k) / log(tau_{k-1}/tau_k)``; ``None`` where undefined.

    The first entry is always ``None``.
    """
    if len(errors) != len(taus):
        raise ValueError("errors and taus must have the same length")
    out = [None]
    for k in range(1, len(errors)):
        e0, e1, t0, t1 = errors[k - 1], errors[k], taus[k - 1], taus[k]
        if min(e0, e1, t0, t1) <= 0 or t0 == t1 or not all(map(math.isfinite, (e0, e1))):
            out.append(None)
        else:
            out.append(math.log(e0 / e1) / math.log(t0 / t1))
    return out


def _label(method: Method, backend: Backend) -> str:
    m = Method(method).value
    return m if Backend(backend) is Backend.SPLIT else f"{m}[oracle]"


def run_sweep(spec, method, steps: Iterable[int], error_fn, problem: str,
              backend=Backend.SPLIT, rule=None) -> list:
    """Integrate ``spec`` once per step count and attach errors and observed orders."""
    records = []
    for n in steps:
        res = integrate(spec, StepperConfig(method, n, backend=backend, rule=rule))
        err = float(error_fn(res.final))
        log.info("%s %s steps=%d error=%.3e time=%.2fs", problem, _label(method, backend), n, err,
                 res.wallclock)
        records.append(RunRecord(problem, _label(method, backend), n, res.tau, err, None,
                                 res.wallclock, res.loop_wallclock))
    orders = observed_order([r.error for r in records], [r.tau for r in records])
    for r, p in zip(records, orders):
        r.order = p
    return records


def adr_steps(dims) -> dict:
    """Default sweeps: the Lawson2b row differs on the 80^3-class grid."""
    return ADR_STEPS_FINE_GRID if min(dims) >= 80 else ADR_STEPS


def run_adr(dims=(40, 41, 42), methods=None, step_lists=None, out=None,
            backend=Backend.SPLIT) -> list:
    """ADR sweeps; error is the relative max-norm error against ``e^T u_0``."""
    prob = build_adr(*dims)
    spec = prob.spec()
    ref = prob.exact(spec.T)
    scale = np.abs(ref).max()
    defaults = adr_steps(prob.dims)
    methods = [Method(m) for m in (methods or defaults)]
    name = "adr-" + "x".join(map(str, prob.dims))
    records = []
    for m in methods:
        steps = (step_lists or {}).get(m) or defaults[m]
        records += run_sweep(spec, m, steps, lambda U: np.abs(U - ref).max() / scale, name,
                             backend=backend)
    if out:
        write_csv(records, out)
    return records


def _cache_dir(cache_dir=None) -> Path:
    if cache_dir is None:
        cache_dir = os.environ.get("KRONPHI_CACHE_DIR") or Path.home() / ".cache" / "kronphi"
    path = Path(cache_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def riccati_reference(n_hat: int, n_steps: int = RICCATI_REFERENCE_STEPS, cache_dir=None,
                      final_time=None) -> np.ndarray:
    """ETD2RK (split) solution with ``n_steps`` steps, cached as ``.npy``.

    The cache key includes the problem data, so a changed discretization
    never picks up a stale file.
    """
    prob = build_riccati(n_hat) if final_time is None else build_riccati(n_hat, final_time=final_time)
    h = hashlib.sha1()
    for arr in (prob.A.data, prob.A.indices, prob.b, prob.c):
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(repr((prob.alpha, prob.final_time, n_steps)).encode())
    path = _cache_dir(cache_dir) / f"riccati_ref_n{n_hat}_{n_steps}_{h.hexdigest()[:12]}.npy"
    if path.exists():
        return np.load(path)
    log.info("computing Riccati reference n_hat=%d with %d ETD2RK steps", n_hat, n_steps)
    U = integrate(prob.spec(), StepperConfig(Method.ETD2RK, n_steps)).final
    tmp = path.with_suffix(".tmp.npy")
    np.save(tmp, U)
    tmp.replace(path)
    return U


def run_riccati(n_hat=30, methods=None, step_lists=None, out=None, backend=Backend.SPLIT,
                ref_steps=RICCATI_REFERENCE_STEPS, cache_dir=None, reference=None) -> list:
    """Riccati sweeps; error is the relative Frobenius error against a fine ETD2RK solution."""
    prob = build_riccati(n_hat)
    spec = prob.spec()
    ref = riccati_reference(n_hat, ref_steps, cache_dir) if reference is None else reference
    scale = np.linalg.norm(ref)
    methods = [Method(m) for m in (methods or RICCATI_STEPS)]
    name = f"riccati-{n_hat}"
    records = []
    for m in methods:
        steps = (step_lists or {}).get(m) or RICCATI_STEPS.get(m) or RICCATI_STEPS[Method.ETD2RK]
        records += run_sweep(spec, m, steps, lambda U: np.linalg.norm(U - ref) / scale, name,
                             backend=backend)
    if out:
        write_csv(records, out)
    return records


def run_steady(n_hat=20, n_steps=200, sample_every=10, final_time=STEADY_FINAL_TIME,
               methods=(Method.ROSENBROCK_EULER, Method.ETD2RK), out=None) -> dict:
    """Relative ARE residual ``||A^T U + U A + C + U B U||_F / ||C||_F`` along the run.

    Returns ``{method: [(step, t, residual), ...]}``.
    """
    prob = build_riccati(n_hat, final_time=final_time)
    spec = prob.spec()
    c_norm = np.linalg.norm(prob.C)
    curves = {}
    for m in methods:
        m = Method(m)
        rows = []
        integrate(spec, StepperConfig(m, n_steps, sample_every=sample_every),
                  observer=lambda k, t, U: rows.append((k, t, are_residual(U, prob) / c_norm)))
        curves[m.value] = rows
    if out:
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("problem", "method", "step", "t", "residual"))
            for m, rows in curves.items():
                for k, t, r in rows:
                    w.writerow((f"riccati-{n_hat}", m, k, _fmt(t), _fmt(r)))
    return curves


def write_csv(records: Sequence[RunRecord], path, loop_time=False) -> None:
    header = list(CSV_HEADER) + (["loop_s"] if loop_time else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in records:
            w.writerow(r.row(loop_time))


def format_table(records: Sequence[RunRecord]) -> str:
    """Aligned text table, one ``steps``/``order``/``error`` block per method."""
    blocks = {}
    for r in records:
        blocks.setdefault((r.problem, r.method), []).append(r)
    lines = []
    for (problem, method), rs in blocks.items():
        label = f"{problem} {method}"
        width = max(len(label), 5)
        cells = [
            ("steps", [str(r.steps) for r in rs]),
            ("order", ["--" if r.order is None else f"{r.order:.2f}" for r in rs]),
            ("error", [f"{r.error:.3e}" for r in rs]),
            ("time", [f"{r.wallclock_s:.2f}" for r in rs]),
        ]
        col = max(len(c) for _, row in cells for c in row)
        for i, (name, row) in enumerate(cells):
            head = label if i == 0 else ""
            lines.append(f"{head:<{width}} | {name:<5} | " + "  ".join(c.rjust(col) for c in row))
        lines.append("-" * len(lines[-1]))
    return "\n".join(lines)
