"""Command-line interface.

Exit codes: 0 success, 1 parse/validation error, 2 size-cap refusal,
3 total solver failure (fallback assignment emitted).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from .instances import GENERATOR_KINDS, generate, normalized_adjacency, maxcut_instance, evaluate
from .net import NetSizeError
from .solver import (
    BruteForceTooLargeError,
    SolveReport,
    SolverOptions,
    solve_2csp,
    solve_boolean_quadratic,
    solve_maxcut,
)
from .spectral import eig_sym, random_dominated_pair, rank_certificate, threshold_rank, verify_rank_bound

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_REFUSED = 2
EXIT_FALLBACK = 3


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, default=0.2, help="approximation parameter in (0,1)")
    p.add_argument("--seed", type=int, default=0, help="64-bit rounding seed")
    p.add_argument("--workers", type=int, default=1, help="parallel net-point workers")
    p.add_argument("--net-cap", type=int, default=10**7, help="refuse nets larger than this")
    p.add_argument("--samples", type=int, default=None, help="rounding samples per net point")
    p.add_argument("--oracle", action="store_true", help="also compute OPT by brute force")
    p.add_argument("--out", type=str, default=None, help="write the JSON report here")
    p.add_argument("--emit-timings", action="store_true",
                   help="include wall-clock timings in the report (breaks byte reproducibility)")
    eig = p.add_mutually_exclusive_group()
    eig.add_argument("--exact-eig", dest="eig_mode", action="store_const", const="exact",
                     help="dense eigendecomposition (default)")
    eig.add_argument("--power-eig", dest="eig_mode", action="store_const", const="power",
                     help="block power iteration with exact fallback")
    p.set_defaults(eig_mode="exact")


def _options(args) -> SolverOptions:
    if args.seed < 0 or args.seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit value")
    return SolverOptions(workers=args.workers, net_cap=args.net_cap, samples=args.samples,
                         oracle=args.oracle, eig_mode=args.eig_mode)


def _emit_report(report: SolveReport, args) -> int:
    if args.out:
        io.ensure_parent_dir(args.out)
        io.write_json(args.out, report.to_dict(include_timings=args.emit_timings))
    print(report.summary())
    if report.timings:
        phases = " ".join(f"{k}={v:.3f}s" for k, v in sorted(report.timings.items()))
        print(f"timings: {phases}", file=sys.stderr)
    return EXIT_FALLBACK if report.fallback_used else EXIT_OK


def cmd_solve(args) -> int:
    instance = io.load_instance(args.instance)
    report = solve_2csp(instance, args.eps, seed=args.seed, options=_options(args))
    return _emit_report(report, args)


def cmd_maxcut(args) -> int:
    n, edges = io.load_graph(args.graph)
    report = solve_maxcut(n, edges, args.eps, seed=args.seed, options=_options(args))
    return _emit_report(report, args)


def cmd_quadratic(args) -> int:
    A = io.load_matrix(args.matrix)
    x, value, report = solve_boolean_quadratic(A, args.eps, seed=args.seed, options=_options(args))
    code = _emit_report(report, args)
    print("x = " + " ".join(f"{int(v):+d}" for v in x), file=sys.stderr)
    return code


def cmd_rank(args) -> int:
    n, edges = io.load_graph(args.graph)
    inst = maxcut_instance(n, edges)
    A = normalized_adjacency(inst)
    spec = eig_sym(A)
    result = {
        "tau": float(args.tau),
        "pos": threshold_rank(spec.eigenvalues, args.tau, "pos"),
        "neg": threshold_rank(spec.eigenvalues, args.tau, "neg"),
        "spectrum_extremes": [float(spec.eigenvalues[0]), float(spec.eigenvalues[-1])],
    }
    if args.out:
        io.ensure_parent_dir(args.out)
        io.write_json(args.out, result)
    print(result[args.side])
    return EXIT_OK


def cmd_gen(args) -> int:
    params = {}
    for key in ("n", "q", "d", "a", "b", "m"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    if args.rho is not None:
        params["rho"] = args.rho
    if args.allow_prob is not None:
        params["allow_prob"] = args.allow_prob
    if args.pred is not None:
        params["pred"] = args.pred
    gen = generate(args.kind, params, args.seed)
    inst = gen.instance
    io.ensure_parent_dir(args.out)
    io.save_instance(args.out, inst)
    extra = ""
    if gen.hidden is not None:
        extra = f" planted_value={evaluate(inst, gen.hidden)}"
    print(f"wrote {args.out}: n={inst.n} q={inst.q} m={inst.m}{extra}")
    return EXIT_OK


def cmd_verify_rank_bound(args) -> int:
    rng = np.random.default_rng(args.seed)
    violations = 0
    trials = []
    for _ in range(args.trials):
        dim = int(rng.integers(4, args.dim_max + 1))
        A, B = random_dominated_pair(dim, rng)
        report = verify_rank_bound(A, B, args.tau, args.sigma)
        trials.append({"dim": dim, "rank_a": report.rank_a, "rank_b": report.rank_b,
                       "bound": report.bound, "holds": report.holds})
        if not report.holds:
            violations += 1
    if args.out:
        io.ensure_parent_dir(args.out)
        io.write_json(args.out, {"tau": float(args.tau), "sigma": float(args.sigma),
                                 "trials": trials, "violations": violations})
    print(f"violations: {violations}")
    return EXIT_OK if violations == 0 else EXIT_INPUT


def cmd_certify(args) -> int:
    rng = np.random.default_rng(args.seed)
    failures = 0
    out = []
    for _ in range(args.trials):
        dim = int(rng.integers(4, args.dim_max + 1))
        A, B = random_dominated_pair(dim, rng)
        eigs = np.linalg.eigvalsh(B)[::-1]
        positive = int(np.sum(eigs > 1e-9))
        if positive == 0:
            continue
        t = int(rng.integers(1, positive + 1))
        lam = float(max(0.0, eigs[t - 1]) * rng.uniform(0.5, 1.0))
        report = rank_certificate(A, B, lam, t)
        out.append({"dim": dim, "t": t, "lam": lam, "inner_a": report.inner_a,
                    "frob_sq": report.frob_sq, "trace": report.trace, "passed": report.passed})
        if not report.passed:
            failures += 1
    if args.out:
        io.ensure_parent_dir(args.out)
        io.write_json(args.out, {"trials": out, "failures": failures})
    for rec in out:
        print(f"dim={rec['dim']} t={rec['t']} lam={rec['lam']:.4f} "
              f"<A,VtV>={rec['inner_a']:.6f} |VtV|F2={rec['frob_sq']:.6f} tr={rec['trace']:.6f} "
              f"{'pass' if rec['passed'] else 'FAIL'}")
    print(f"failures: {failures}")
    return EXIT_OK if failures == 0 else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="threshcsp",
                                     description="Approximate 2CSP/MAX-CUT solver for bounded "
                                                 "threshold rank constraint graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a 2CSP instance (JSON)")
    p.add_argument("--instance", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("maxcut", help="solve MAX-CUT on a graph file")
    p.add_argument("--graph", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_maxcut)

    p = sub.add_parser("quadratic", help="maximize x^T A x over signs, A from a matrix file")
    p.add_argument("--matrix", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_quadratic)

    p = sub.add_parser("rank", help="threshold ranks of a graph's normalized adjacency")
    p.add_argument("--graph", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--side", choices=["pos", "neg"], default="pos")
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("gen", help="generate an instance")
    p.add_argument("--kind", choices=GENERATOR_KINDS, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--allow-prob", type=float)
    p.add_argument("--pred", choices=["neq", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify-rank-bound", help="randomized trials of the threshold-rank comparison")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim-max", type=int, default=30)
    p.add_argument("--tau", type=float, default=0.25)
    p.add_argument("--sigma", type=float, default=0.25)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_verify_rank_bound)

    p = sub.add_parser("certify", help="construct and measure rank certificates on random inputs")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim-max", type=int, default=20)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_certify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (io.FileFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NetSizeError, BruteForceTooLargeError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
