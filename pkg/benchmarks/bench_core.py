"""Benchmark the compiled ADMM kernel against the pure-numpy fallback.

Builds representative per-net-point SDPs at a few sizes, solves each with
both backends on identical inputs, and reports per-iteration cost, solve
time, and the objective agreement between the two implementations.

Usage: python benchmarks/bench_core.py [--repeats N]
"""

import argparse
import time

import numpy as np

from threshcsp._kernel import get_backend
from threshcsp.instances import generate, normalized_label_extended, strip_isolated
from threshcsp.net import build_net, lift
from threshcsp.sdp import SdpBuilder, svec
from threshcsp.spectral import top_eigenspace


def build_case(n, q, m, gseed):
    inst = generate("planted-assignment", {"n": n, "q": q, "m": m}, gseed).instance
    inst, _ = strip_isolated(inst)
    M, _ = normalized_label_extended(inst)
    dhat = inst.q * inst.degrees().astype(float)
    trd = float(dhat.sum())
    eps_alg = 0.4
    proj = top_eigenspace(M, eps_alg)
    builder = SdpBuilder(M, np.repeat(dhat, inst.q), proj, eps_alg, trd, inst.n, inst.q)
    net = build_net(max(proj.k, 1), np.sqrt(trd), np.sqrt(eps_alg * trd))
    v = lift(net.points[net.size // 2 + 1], proj.basis) if proj.k else np.zeros(inst.n * inst.q)
    prob = builder.problem(v)
    return inst, builder, prob


def run_kernel(kern, builder, prob, max_iter, polish_max=2000):
    space = builder.space
    x0 = builder._x_uniform
    t0 = time.perf_counter()
    z, info = kern.admm_solve(
        np.ascontiguousarray(builder.c_svec), space.basis, space.mode,
        np.ascontiguousarray(space.z0), np.ascontiguousarray(space.bq),
        np.ascontiguousarray(prob.p_svec), np.ascontiguousarray(prob.pt_svec),
        prob.ptn2, prob.s_ball, int(prob.use_ball),
        space.si, space.sj, space.d,
        x0, np.zeros_like(x0),
        1.0, 1.6, max_iter, 1e-11, 1e-9, 25, 500, 1e-9,
        1e-7 * max(1.0, prob.s_ball), 3e-8, polish_max,
    )
    return time.perf_counter() - t0, info


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = {"python": get_backend("python")}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("compiled backend unavailable; benchmarking the fallback only")

    cases = [(6, 2, 9, 0), (10, 2, 18, 0), (9, 3, 16, 6)]
    print(f"{'case':>14} {'backend':>8} {'d':>4} {'iters':>7} {'solve ms':>9} {'us/iter':>8} {'objective':>12}")
    for n, q, m, gseed in cases:
        inst, builder, prob = build_case(n, q, m, gseed)
        results = {}
        for name, kern in backends.items():
            best = np.inf
            info = None
            for _ in range(args.repeats):
                dt, info = run_kernel(kern, builder, prob, max_iter=4000)
                best = min(best, dt)
            total_iters = info["iterations"] + info["polish_iterations"]
            results[name] = info["objective"]
            print(f"{f'n{n}q{q}m{m}':>14} {name:>8} {builder.space.d:>4} {total_iters:>7} "
                  f"{best * 1e3:>9.1f} {best / max(1, total_iters) * 1e6:>8.1f} {info['objective']:>12.6f}")
        if len(results) == 2:
            diff = abs(results["python"] - results["cython"])
            print(f"{'':>14} objective agreement |python - cython| = {diff:.2e}")


if __name__ == "__main__":
    main()
