"""Command line entry point ``bench``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import bench
from .errors import ConfigurationError, DivergenceError
from .integrators import Backend, Method
from .selftest import run_selftest


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _methods(text: str) -> list:
    try:
        return [Method(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        choices = ", ".join(m.value for m in Method)
        raise argparse.ArgumentTypeError(f"{exc}; choose from {choices}")


def _step_lists(methods, steps):
    if steps is None:
        return None
    return {m: steps for m in methods}


def _add_sweep_options(p, default_methods):
    p.add_argument("--methods", type=_methods, default=None,
                   help="comma separated methods (default: " + ",".join(m.value for m in default_methods) + ")")
    p.add_argument("--steps", type=_ints, default=None,
                   help="comma separated step counts applied to every method (default: built-in sweeps)")
    p.add_argument("--out", default=None, help="write records to this CSV file")
    p.add_argument("--backend", choices=[b.value for b in Backend], default=Backend.SPLIT.value)
    p.add_argument("--loop-time", action="store_true",
                   help="append a loop-only wall-clock column to the CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Kronecker-sum exponential integrator benchmarks")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every run")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("adr", help="3D advection-diffusion-reaction convergence sweeps")
    p.add_argument("--dims", type=_ints, default=[40, 41, 42], help="inner grid sizes N1,N2,N3")
    _add_sweep_options(p, bench.ADR_STEPS)

    p = sub.add_parser("riccati", help="LQR Riccati convergence sweeps")
    p.add_argument("--nhat", type=int, default=30, help="inner points per direction")
    p.add_argument("--ref-steps", type=int, default=bench.RICCATI_REFERENCE_STEPS,
                   help="ETD2RK steps of the reference solution")
    _add_sweep_options(p, bench.RICCATI_STEPS)

    p = sub.add_parser("steady", help="ARE residual along a long Riccati run")
    p.add_argument("--nhat", type=int, default=20)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--sample-every", type=int, default=10)
    p.add_argument("--final-time", type=float, default=bench.STEADY_FINAL_TIME)
    p.add_argument("--out", default=None, help="write the residual curves to this CSV file")

    p = sub.add_parser("selftest", help="run the invariant suite")
    p.add_argument("--quad-nodes", type=int, default=None, help="override the quadrature size")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _finish_sweep(records, args) -> int:
    print(bench.format_table(records))
    if args.out:
        bench.write_csv(records, args.out, loop_time=args.loop_time)
        print(f"wrote {len(records)} records to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "adr":
            if len(args.dims) != 3:
                raise ConfigurationError(f"--dims needs three sizes, got {args.dims}")
            methods = args.methods or list(bench.ADR_STEPS)
            records = bench.run_adr(tuple(args.dims), methods, _step_lists(methods, args.steps),
                                    backend=args.backend)
            return _finish_sweep(records, args)
        if args.command == "riccati":
            methods = args.methods or list(bench.RICCATI_STEPS)
            records = bench.run_riccati(args.nhat, methods, _step_lists(methods, args.steps),
                                        backend=args.backend, ref_steps=args.ref_steps)
            return _finish_sweep(records, args)
        if args.command == "steady":
            curves = bench.run_steady(args.nhat, args.steps, args.sample_every, args.final_time,
                                      out=args.out)
            status = 0
            for method, rows in curves.items():
                print(method)
                for k, t, r in rows:
                    print(f"  step {k:>6d}  t={t:.6f}  residual={r:.6e}")
                tail = [r for k, _, r in rows if k >= 10]
                if any(b >= a for a, b in zip(tail, tail[1:])):
                    print(f"  residual of {method} is not monotonically decreasing after step 10")
                    status = 1
            return status
        if args.command == "selftest":
            ok, _ = run_selftest(quad_nodes=args.quad_nodes, seed=args.seed)
            return 0 if ok else 1
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
