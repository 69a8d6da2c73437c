"""End-to-end solvers: general 2CSP, MAX-CUT, and Boolean quadratic forms.

Pipeline per problem: project onto the top eigenspace of the (normalized,
block-structured) quadratic-form matrix, enumerate a grid net over the
reachable ball in that subspace, solve one small moment SDP per net point,
round its marginals independently, and return the best sampled assignment.
A brute-force oracle provides exact optima at desk scale.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .instances import (
    CspInstance,
    evaluate,
    evaluate_batch,
    maxcut_instance,
    normalized_adjacency,
    normalized_label_extended,
    reattach,
    require_valid,
    strip_isolated,
)
from .net import DEFAULT_NET_CAP, build_net, lift
from .sdp import AdmmOptions, SdpBuilder, expected_quadform, round_assignments, solve_sdp, svec
from .spectral import PowerConvergenceError, eig_sym, top_eigenspace

BRUTE_FORCE_CAP = 10**7

# the two-symbol sign block: y-encoding of x in {+1, -1} with a=0 -> +1
_SIGN_BLOCK = np.array([[0.5, -0.5], [-0.5, 0.5]])


class BruteForceTooLargeError(RuntimeError):
    """Search space exceeds the exhaustive-enumeration cap."""


@dataclass
class SolverOptions:
    workers: int = 1
    net_cap: int = DEFAULT_NET_CAP
    samples: int | None = None         # rounding samples per net point
    oracle: bool = False               # also compute OPT by brute force
    eig_mode: str = "exact"            # "exact" | "power"
    power_seed: int = 0
    admm: AdmmOptions = field(default_factory=AdmmOptions)
    # optional memo for the deterministic SDP solves (seeds only drive the
    # rounding): share ONLY across calls with identical instance/eps/options
    sdp_cache: dict | None = None


@dataclass
class SolveReport:
    algorithm: str
    eps: float
    eps_alg: float
    seed: int
    n: int
    q: int
    m: int | None
    k: int
    net_size: int
    net_radius: float
    net_mesh: float
    tr_d: float
    scale: float
    eta_obj: float
    backend: str
    top_eigenvalues: list
    lambda_max: float
    lambda_min: float
    samples_per_point: int
    points: list
    best_assignment: list
    best_objective: float
    opt: float | None
    gap: float | None
    fallback_used: bool
    notes: list
    timings: dict

    def to_dict(self, include_timings: bool = False) -> dict:
        out = {
            "algorithm": self.algorithm,
            "eps": float(self.eps),
            "eps_alg": float(self.eps_alg),
            "seed": int(self.seed),
            "n": int(self.n),
            "q": int(self.q),
            "m": None if self.m is None else int(self.m),
            "k": int(self.k),
            "net_size": int(self.net_size),
            "net_radius": float(self.net_radius),
            "net_mesh": float(self.net_mesh),
            "tr_d": float(self.tr_d),
            "scale": float(self.scale),
            "eta_obj": float(self.eta_obj),
            "backend": self.backend,
            "top_eigenvalues": [float(x) for x in self.top_eigenvalues],
            "lambda_max": float(self.lambda_max),
            "lambda_min": float(self.lambda_min),
            "samples_per_point": int(self.samples_per_point),
            "points": self.points,
            "best_assignment": [int(x) for x in self.best_assignment],
            "best_objective": float(self.best_objective),
            "opt": None if self.opt is None else float(self.opt),
            "gap": None if self.gap is None else float(self.gap),
            "fallback_used": bool(self.fallback_used),
            "notes": list(self.notes),
        }
        if include_timings:
            out["timings"] = {k: float(v) for k, v in self.timings.items()}
        return out

    def summary(self) -> str:
        opt = "n/a" if self.opt is None else f"{self.opt:g}"
        gap = "n/a" if self.gap is None else f"{self.gap:g}"
        return f"best={self.best_objective:g} OPT={opt} gap={gap} |S|={self.net_size} k={self.k}"


def _point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _lex_best(assignments: np.ndarray, values: np.ndarray) -> tuple[float, np.ndarray]:
    """Max value; ties resolved to the lexicographically smallest assignment."""
    vmax = values.max()
    cand = assignments[values == vmax]
    order = np.lexsort(cand.T[::-1])
    return vmax, cand[order[0]]


def _limit_blas_threads():
    """Single-threaded BLAS: small-matrix LAPACK here is faster without the
    thread pool, and results stay bit-identical across worker counts."""
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=1)
    except Exception:
        import contextlib

        return contextlib.nullcontext()


def _run_pipeline(*, M, dhat, n, q, eps_user, eps_alg, seed, options, evaluate_units):
    """Shared subspace-enumeration + SDP loop.

    evaluate_units maps an (S, n) assignment batch to problem-unit objectives.
    Returns a dict of report ingredients (sub-instance coordinates).
    """
    with _limit_blas_threads():
        return _run_pipeline_inner(M=M, dhat=dhat, n=n, q=q, eps_user=eps_user,
                                   eps_alg=eps_alg, seed=seed, options=options,
                                   evaluate_units=evaluate_units)


def _run_pipeline_inner(*, M, dhat, n, q, eps_user, eps_alg, seed, options, evaluate_units):
    timings = {}
    notes = []
    t0 = time.perf_counter()

    e_diag = np.repeat(np.asarray(dhat, dtype=np.float64), q)
    trd = float(np.sum(dhat))
    spectrum = eig_sym(M)
    if options.eig_mode == "power":
        try:
            projector = top_eigenspace(M, eps_alg, mode="power", seed=options.power_seed)
        except PowerConvergenceError as exc:
            notes.append(f"power iteration failed ({exc}); fell back to exact eigendecomposition")
            projector = top_eigenspace(M, eps_alg, mode="exact")
    else:
        projector = top_eigenspace(M, eps_alg, mode="exact")
    k = projector.k
    timings["spectral"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    radius = math.sqrt(trd)
    mesh = math.sqrt(eps_alg * trd)
    net = build_net(k, radius, mesh, cap=options.net_cap)
    timings["net"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    cache = options.sdp_cache
    builder = SdpBuilder(M, e_diag, projector, eps_alg, trd, n, q)
    if cache is not None and "base" in cache:
        base = cache["base"]
    else:
        base = solve_sdp(builder.problem(np.zeros(n * q), use_ball=False), options=options.admm)
        if cache is not None:
            cache["base"] = base
    warm = None
    if base.status == "solved":
        warm = svec(base.pe.X, builder.space.si, builder.space.sj)
    else:
        notes.append(f"base relaxation solve returned {base.status}; points start cold")
    timings["base_solve"] = time.perf_counter() - t2

    samples = options.samples if options.samples is not None else max(16, math.ceil(4.0 / eps_user))

    def solve_point(idx: int):
        coords = net.points[idx]
        v = lift(coords, projector.basis) if k > 0 else np.zeros(n * q)
        if cache is not None and ("pt", idx) in cache:
            sol = cache[("pt", idx)]
        else:
            sol = solve_sdp(builder.problem(v), warm=warm, options=options.admm)
            if cache is not None:
                cache[("pt", idx)] = sol
        rec = {
            "index": int(idx),
            "status": sol.status,
            "sdp_value": None,
            "ball_slack": None,
            "expected_quadform": None,
            "best_value": None,
            "iterations": int(sol.iterations),
        }
        best = None
        if sol.status == "solved":
            rng = _point_rng(seed, idx)
            assignments = round_assignments(sol.pe, rng, samples)
            values = np.asarray(evaluate_units(assignments), dtype=np.float64)
            vmax, amax = _lex_best(assignments, values)
            rec["sdp_value"] = float(sol.objective)
            rec["ball_slack"] = float(sol.ball_value)
            rec["expected_quadform"] = float(expected_quadform(sol.pe, builder.C_yy))
            rec["best_value"] = float(vmax)
            best = (float(vmax), idx, amax)
        return rec, best

    t3 = time.perf_counter()
    if options.workers > 1:
        with ThreadPoolExecutor(max_workers=options.workers) as pool:
            results = list(pool.map(solve_point, range(net.size)))
    else:
        results = [solve_point(idx) for idx in range(net.size)]
    timings["points"] = time.perf_counter() - t3

    records = [rec for rec, _ in results]
    candidates = [best for _, best in results if best is not None]

    fallback_used = False
    if candidates:
        best_value, best_idx, best_assignment = candidates[0]
        for value, idx, assignment in candidates[1:]:
            if value > best_value:
                best_value, best_idx, best_assignment = value, idx, assignment
    else:
        # total solver failure: emit the best of 100 uniform assignments, flagged
        fallback_used = True
        notes.append("all net points infeasible/unresolved; fell back to uniform sampling")
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2**32]))
        assignments = rng.integers(0, q, size=(100, n))
        values = np.asarray(evaluate_units(assignments), dtype=np.float64)
        best_value, best_assignment = _lex_best(assignments, values)

    timings["total"] = time.perf_counter() - t0
    top = spectrum.eigenvalues[: min(10, spectrum.eigenvalues.size)]
    return {
        "k": k,
        "net": net,
        "builder": builder,
        "eps_alg": eps_alg,
        "tr_d": trd,
        "scale": builder.scale(),
        "eta_obj": 1e-5 * builder.scale(),
        "records": records,
        "best_value": best_value,
        "best_assignment": np.asarray(best_assignment, dtype=np.int64),
        "fallback_used": fallback_used,
        "notes": notes,
        "timings": timings,
        "samples": samples,
        "lambda_max": float(spectrum.eigenvalues[0]) if spectrum.eigenvalues.size else 0.0,
        "lambda_min": float(spectrum.eigenvalues[-1]) if spectrum.eigenvalues.size else 0.0,
        "top_eigenvalues": [float(x) for x in top],
    }


def _check_eps(eps: float) -> float:
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return float(eps)


def _report_from_pipeline(algorithm, res, *, eps, seed, n, q, m, best_assignment,
                          best_objective, opt) -> SolveReport:
    gap = None if opt is None else float(opt) - float(best_objective)
    return SolveReport(
        algorithm=algorithm, eps=eps, eps_alg=res["eps_alg"], seed=seed, n=n, q=q, m=m,
        k=res["k"], net_size=res["net"].size, net_radius=res["net"].radius,
        net_mesh=res["net"].mesh, tr_d=res["tr_d"], scale=res["scale"],
        eta_obj=res["eta_obj"], backend=_kernel.backend_name(),
        top_eigenvalues=res["top_eigenvalues"], lambda_max=res["lambda_max"],
        lambda_min=res["lambda_min"], samples_per_point=res["samples"],
        points=res["records"], best_assignment=list(map(int, best_assignment)),
        best_objective=best_objective, opt=opt, gap=gap,
        fallback_used=res["fallback_used"], notes=res["notes"], timings=res["timings"],
    )


def _trivial_report(algorithm, *, eps, seed, n, q, m, assignment, objective, opt) -> SolveReport:
    gap = None if opt is None else float(opt) - float(objective)
    return SolveReport(
        algorithm=algorithm, eps=eps, eps_alg=eps, seed=seed, n=n, q=q, m=m,
        k=0, net_size=0, net_radius=0.0, net_mesh=0.0, tr_d=0.0, scale=0.0, eta_obj=0.0,
        backend=_kernel.backend_name(), top_eigenvalues=[], lambda_max=0.0, lambda_min=0.0,
        samples_per_point=0, points=[], best_assignment=list(map(int, assignment)),
        best_objective=objective, opt=opt, gap=gap, fallback_used=False,
        notes=["no constraints after stripping isolated variables"], timings={},
    )


def solve_2csp(instance: CspInstance, eps: float, seed: int = 0,
               options: SolverOptions | None = None) -> SolveReport:
    """Approximate MAX-2CSP via subspace enumeration over the label-extended
    matrix; the internal error parameter is doubled so the user-facing eps
    matches the additive O(eps*q*m) guarantee."""
    options = options or SolverOptions()
    eps = _check_eps(eps)
    require_valid(instance)

    sub, keep = strip_isolated(instance)
    opt = None
    if options.oracle:
        opt = float(brute_force(instance)[0])
    if sub.m == 0:
        assignment = np.zeros(instance.n, dtype=np.int64)
        return _trivial_report("2csp", eps=eps, seed=seed, n=instance.n, q=instance.q,
                               m=0, assignment=assignment, objective=0.0, opt=opt)

    M, E = normalized_label_extended(sub)
    dhat = sub.q * sub.degrees().astype(np.float64)
    res = _run_pipeline(M=M, dhat=dhat, n=sub.n, q=sub.q, eps_user=eps, eps_alg=2.0 * eps,
                        seed=seed, options=options,
                        evaluate_units=lambda batch: evaluate_batch(sub, batch))
    best_assignment = reattach(res["best_assignment"], keep, instance.n)
    best_objective = float(evaluate(instance, best_assignment))
    return _report_from_pipeline("2csp", res, eps=eps, seed=seed, n=instance.n, q=instance.q,
                                 m=instance.m, best_assignment=best_assignment,
                                 best_objective=best_objective, opt=opt)


def solve_maxcut(n: int, edges, eps: float, seed: int = 0,
                 options: SolverOptions | None = None) -> SolveReport:
    """Approximate MAX-CUT; the quadratic-form matrix is the negated normalized
    adjacency tensored with the sign block, so the enumeration dimension is the
    count of eigenvalues <= -eps of the normalized adjacency."""
    options = options or SolverOptions()
    eps = _check_eps(eps)
    instance = require_valid(maxcut_instance(n, edges))
    if instance.m < 1:
        raise ValueError("MAX-CUT requires at least one edge")

    sub, keep = strip_isolated(instance)
    opt = None
    if options.oracle:
        opt = float(brute_force(instance)[0])

    A_norm = normalized_adjacency(sub)
    M = -np.kron(A_norm, _SIGN_BLOCK)
    dhat = sub.degrees().astype(np.float64)
    res = _run_pipeline(M=M, dhat=dhat, n=sub.n, q=2, eps_user=eps, eps_alg=eps,
                        seed=seed, options=options,
                        evaluate_units=lambda batch: evaluate_batch(sub, batch))
    best_assignment = reattach(res["best_assignment"], keep, instance.n)
    best_objective = float(evaluate(instance, best_assignment))
    return _report_from_pipeline("maxcut", res, eps=eps, seed=seed, n=instance.n, q=2,
                                 m=instance.m, best_assignment=best_assignment,
                                 best_objective=best_objective, opt=opt)


def solve_boolean_quadratic(A: np.ndarray, eps: float, seed: int = 0,
                            options: SolverOptions | None = None) -> tuple[np.ndarray, float, SolveReport]:
    """Approximately maximize x^T A x over x in {+1, -1}^n.

    The diagonal contributes a constant and is added back in reporting; A is
    rescaled to unit operator norm when needed (noted in the report).
    Returns (x, value, report); the report's assignment uses block symbols
    (0 -> +1, 1 -> -1).
    """
    options = options or SolverOptions()
    eps = _check_eps(eps)
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got {A.shape}")
    if np.abs(A - A.T).max() > 1e-10 * max(1.0, np.abs(A).max()):
        raise ValueError("A must be symmetric")
    n = A.shape[0]
    diag_shift = float(np.trace(A))
    A0 = A - np.diag(np.diag(A))
    opnorm = float(np.abs(np.linalg.eigvalsh(A0)).max()) if n else 0.0
    scale = opnorm if opnorm > 1.0 else 1.0

    opt = None
    if options.oracle:
        opt = float(brute_force_quadratic(A)[0])

    def eval_units(batch: np.ndarray) -> np.ndarray:
        X = 1.0 - 2.0 * batch.astype(np.float64)
        return np.einsum("si,ij,sj->s", X, A, X)

    M = np.kron(A0 / scale, _SIGN_BLOCK)
    res = _run_pipeline(M=M, dhat=np.ones(n), n=n, q=2, eps_user=eps, eps_alg=eps,
                        seed=seed, options=options, evaluate_units=eval_units)
    if scale > 1.0:
        res["notes"].append(f"A rescaled by 1/{scale:.6g} to unit operator norm")
    best_blocks = res["best_assignment"]
    x = (1 - 2 * best_blocks).astype(np.int64)
    value = float(x @ A @ x)
    report = _report_from_pipeline("quadratic", res, eps=eps, seed=seed, n=n, q=2, m=None,
                                   best_assignment=best_blocks, best_objective=value, opt=opt)
    return x, value, report


# ---------------------------------------------------------------------------
# brute-force oracles


def _mixed_radix(start: int, stop: int, n: int, q: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    divisors = q ** (n - 1 - np.arange(n, dtype=np.int64))
    return (idx[:, None] // divisors[None, :]) % q


def brute_force(instance: CspInstance) -> tuple[int, np.ndarray]:
    """Exact optimum by exhaustive enumeration; lexicographically smallest
    optimal assignment wins ties.  Refuses q^n > 10^7."""
    require_valid(instance)
    total = instance.q**instance.n
    if total > BRUTE_FORCE_CAP:
        raise BruteForceTooLargeError(f"q^n = {total} exceeds cap {BRUTE_FORCE_CAP}")
    best_val = -1
    best_asg = None
    chunk = 1 << 16
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        block = _mixed_radix(start, stop, instance.n, instance.q)
        vals = evaluate_batch(instance, block)
        pos = int(np.argmax(vals))  # first occurrence = lex-smallest in the chunk
        if vals[pos] > best_val:
            best_val = int(vals[pos])
            best_asg = block[pos].copy()
    return best_val, best_asg


def brute_force_quadratic(A: np.ndarray) -> tuple[float, np.ndarray]:
    """Exact maximum of x^T A x over the sign hypercube (2^n <= 10^7)."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    total = 2**n
    if total > BRUTE_FORCE_CAP:
        raise BruteForceTooLargeError(f"2^n = {total} exceeds cap {BRUTE_FORCE_CAP}")
    best_val = -np.inf
    best_x = None
    chunk = 1 << 14
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        block = _mixed_radix(start, stop, n, 2)
        X = 1.0 - 2.0 * block.astype(np.float64)
        vals = np.einsum("si,ij,sj->s", X, A, X)
        pos = int(np.argmax(vals))
        if vals[pos] > best_val + 1e-12:
            best_val = float(vals[pos])
            best_x = X[pos].astype(np.int64)
    return best_val, best_x
