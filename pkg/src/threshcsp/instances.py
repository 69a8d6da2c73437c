"""MAX-2CSP instances: per-edge allowed-pair predicates over alphabet [q].

Provides the data model, objective evaluation, the label-extended graph of an
instance (vertex (i, a) = "variable i takes value a"), its degree-normalized
form, and seeded instance generators for experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Edge = tuple[int, int, frozenset]


def normalize_edges(edges) -> tuple[Edge, ...]:
    """Canonicalize raw (u, v, allowed) triples: u < v, mirrored predicates,
    frozen allowed sets, edges sorted by endpoint pair."""
    norm = []
    for u, v, allowed in edges:
        if u > v:
            u, v = v, u
            allowed = {(b, a) for a, b in allowed}
        norm.append((int(u), int(v), frozenset((int(a), int(b)) for a, b in allowed)))
    norm.sort(key=lambda e: (e[0], e[1]))
    return tuple(norm)


@dataclass(frozen=True)
class CspInstance:
    """A 2CSP on n variables over [q]; each edge carries its satisfying pairs."""

    n: int
    q: int
    edges: tuple[Edge, ...]
    name: str = field(default="", compare=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def allowed_tables(self) -> list[np.ndarray]:
        """One q x q boolean table per edge, indexed [a, b] for (value_u, value_v)."""
        tables = []
        for _, _, allowed in self.edges:
            tab = np.zeros((self.q, self.q), dtype=bool)
            for a, b in allowed:
                tab[a, b] = True
            tables.append(tab)
        return tables


def validate(instance: CspInstance) -> list[str]:
    """Return all invariant violations (empty list means the instance is valid)."""
    out = []
    if instance.n < 1:
        out.append(f"n must be >= 1, got {instance.n}")
    if instance.q < 2:
        out.append(f"q must be >= 2, got {instance.q}")
    seen = set()
    for pos, (u, v, allowed) in enumerate(instance.edges):
        if u == v:
            out.append(f"edge[{pos}]: self-loop ({u},{v})")
            continue
        if not (0 <= u < v < instance.n):
            out.append(f"edge[{pos}]: endpoints ({u},{v}) violate 0 <= u < v < n")
        if (u, v) in seen:
            out.append(f"edge[{pos}]: duplicate edge ({u},{v})")
        seen.add((u, v))
        if len(allowed) == 0:
            out.append(f"edge[{pos}]: empty predicate")
        for a, b in allowed:
            if not (0 <= a < instance.q and 0 <= b < instance.q):
                out.append(f"edge[{pos}]: allowed pair ({a},{b}) outside [0,{instance.q})^2")
    return out


def require_valid(instance: CspInstance) -> CspInstance:
    violations = validate(instance)
    if violations:
        raise ValueError("invalid instance: " + "; ".join(violations))
    return instance


def evaluate(instance: CspInstance, values) -> int:
    """Number of satisfied constraints for one assignment."""
    values = np.asarray(values, dtype=np.int64)
    if values.shape != (instance.n,):
        raise ValueError(f"assignment length {values.shape} does not match n={instance.n}")
    if values.size and (values.min() < 0 or values.max() >= instance.q):
        raise ValueError("assignment entry outside [0, q)")
    total = 0
    for u, v, allowed in instance.edges:
        if (int(values[u]), int(values[v])) in allowed:
            total += 1
    return total


def evaluate_batch(instance: CspInstance, values: np.ndarray) -> np.ndarray:
    """Vectorized `evaluate` over rows of an (S, n) assignment array."""
    values = np.asarray(values, dtype=np.int64)
    if values.ndim != 2 or values.shape[1] != instance.n:
        raise ValueError(f"expected (S, {instance.n}) array, got {values.shape}")
    total = np.zeros(values.shape[0], dtype=np.int64)
    for (u, v, _), tab in zip(instance.edges, instance.allowed_tables()):
        total += tab[values[:, u], values[:, v]]
    return total


def degree_diagonal(instance: CspInstance) -> np.ndarray:
    return np.diag(instance.degrees().astype(np.float64))


def label_extended(instance: CspInstance) -> np.ndarray:
    """0/1 adjacency of the label-extended graph; row index q*i + a."""
    nq = instance.n * instance.q
    B = np.zeros((nq, nq), dtype=np.float64)
    q = instance.q
    for u, v, allowed in instance.edges:
        for a, b in allowed:
            B[q * u + a, q * v + b] = 1.0
            B[q * v + b, q * u + a] = 1.0
    return B


def normalized_label_extended(instance: CspInstance) -> tuple[np.ndarray, np.ndarray]:
    """Degree-normalized label-extended matrix M and matching weight matrix E.

    M[(i,a),(j,b)] = (1/q) * A_ij / sqrt(d_i d_j) for allowed (a, b), else 0;
    E = q * D (x) Id_q.  ||M||_op <= 1 and all diagonal q x q blocks are zero.
    """
    deg = instance.degrees()
    if (deg == 0).any():
        bad = np.flatnonzero(deg == 0).tolist()
        raise ValueError(f"degree-0 variable(s) {bad}: strip before normalizing")
    q = instance.q
    inv_sqrt_d = 1.0 / np.sqrt(deg.astype(np.float64))
    scale_vec = np.repeat(inv_sqrt_d, q)
    M = label_extended(instance)
    M *= scale_vec[:, None]
    M *= scale_vec[None, :]
    M /= q
    E = np.diag(np.repeat(q * deg.astype(np.float64), q))
    return M, E


def normalized_adjacency(instance: CspInstance) -> np.ndarray:
    """D^{-1/2} A D^{-1/2} of the constraint graph (degree-0 variables rejected)."""
    deg = instance.degrees()
    if (deg == 0).any():
        raise ValueError("degree-0 variable present")
    A = np.zeros((instance.n, instance.n), dtype=np.float64)
    for u, v, _ in instance.edges:
        A[u, v] = A[v, u] = 1.0
    inv_sqrt_d = 1.0 / np.sqrt(deg.astype(np.float64))
    return A * inv_sqrt_d[:, None] * inv_sqrt_d[None, :]


def strip_isolated(instance: CspInstance) -> tuple[CspInstance, np.ndarray]:
    """Drop degree-0 variables; returns (sub-instance, original indices kept)."""
    deg = instance.degrees()
    keep = np.flatnonzero(deg > 0)
    if keep.size == instance.n:
        return instance, keep
    remap = {int(old): new for new, old in enumerate(keep)}
    edges = [(remap[u], remap[v], allowed) for u, v, allowed in instance.edges]
    sub = CspInstance(n=int(keep.size), q=instance.q, edges=normalize_edges(edges), name=instance.name)
    return sub, keep


def reattach(values_sub, keep: np.ndarray, n: int, fill: int = 0) -> np.ndarray:
    """Inverse of strip_isolated on assignments; stripped variables get `fill`."""
    out = np.full(n, fill, dtype=np.int64)
    out[keep] = np.asarray(values_sub, dtype=np.int64)
    return out


# ---------------------------------------------------------------------------
# MAX-CUT helpers


CUT_PAIRS = frozenset({(0, 1), (1, 0)})


def maxcut_instance(n: int, edges, name: str = "") -> CspInstance:
    """Encode a graph as a q=2 CSP with inequality predicates (cut = satisfied edges)."""
    return CspInstance(n=n, q=2, edges=normalize_edges([(u, v, CUT_PAIRS) for u, v in edges]), name=name)


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class GeneratedInstance:
    instance: CspInstance
    hidden: np.ndarray | None = None  # planted assignment when applicable
    info: dict | None = None


GENERATOR_KINDS = ("random-regular", "complete-bipartite-noise", "planted-assignment", "random-csp")


def _pairing_model_regular(n: int, d: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    if n * d % 2 != 0:
        raise ValueError(f"n*d must be even for a {d}-regular graph on {n} vertices")
    if d >= n:
        raise ValueError(f"degree {d} requires more than {n} vertices")
    # rejection-sampled configuration model; acceptance odds are fine for small d
    for _ in range(10_000):
        stubs = np.repeat(np.arange(n), d)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        edges = {(min(int(u), int(v)), max(int(u), int(v))) for u, v in pairs}
        if len(edges) == n * d // 2 and all(u != v for u, v in edges):
            return sorted(edges)
    raise RuntimeError("pairing model failed to produce a simple regular graph")


def _random_edge_set(n: int, m: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    max_m = n * (n - 1) // 2
    if m > max_m:
        raise ValueError(f"m={m} exceeds {max_m} possible edges on {n} vertices")
    chosen = rng.choice(max_m, size=m, replace=False)
    all_pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return sorted(all_pairs[int(c)] for c in chosen)


def _random_allowed(q: int, rng: np.random.Generator, allow_prob: float, must_contain=None) -> set:
    allowed = set()
    for a in range(q):
        for b in range(q):
            if rng.random() < allow_prob:
                allowed.add((a, b))
    if must_contain is not None:
        allowed.add(must_contain)
    if not allowed:
        allowed.add((int(rng.integers(q)), int(rng.integers(q))))
    return allowed


def generate(kind: str, params: dict, seed: int) -> GeneratedInstance:
    """Seeded instance generator; deterministic for a fixed (kind, params, seed)."""
    rng = np.random.default_rng(seed)
    params = dict(params)

    if kind == "random-regular":
        n, d = int(params["n"]), int(params["d"])
        q = int(params.get("q", 2))
        pred = params.get("pred", "neq")
        edge_list = _pairing_model_regular(n, d, rng)
        if pred == "neq":
            edges = [(u, v, {(a, b) for a in range(q) for b in range(q) if a != b}) for u, v in edge_list]
        elif pred == "random":
            allow_prob = float(params.get("allow_prob", 0.5))
            edges = [(u, v, _random_allowed(q, rng, allow_prob)) for u, v in edge_list]
        else:
            raise ValueError(f"unknown predicate kind {pred!r}")
        inst = CspInstance(n=n, q=q, edges=normalize_edges(edges), name=f"regular-n{n}-d{d}-s{seed}")
        return GeneratedInstance(require_valid(inst), info={"d": d})

    if kind == "complete-bipartite-noise":
        a, b = int(params["a"]), int(params["b"])
        rho = float(params.get("rho", 0.0))
        if not (0.0 <= rho <= 1.0):
            raise ValueError(f"rho must be in [0,1], got {rho}")
        n = a + b
        edge_list = [(u, v) for u in range(a) for v in range(a, n)]
        present = set(edge_list)
        for u in range(n):
            for v in range(u + 1, n):
                if (u, v) not in present and rng.random() < rho:
                    edge_list.append((u, v))
        inst = maxcut_instance(n, edge_list, name=f"bipnoise-a{a}-b{b}-r{rho}-s{seed}")
        return GeneratedInstance(require_valid(inst), info={"a": a, "b": b, "rho": rho})

    if kind == "planted-assignment":
        n, q, m = int(params["n"]), int(params["q"]), int(params["m"])
        allow_prob = float(params.get("allow_prob", 0.25))
        edge_list = _random_edge_set(n, m, rng)
        hidden = rng.integers(0, q, size=n)
        edges = []
        for u, v in edge_list:
            edges.append((u, v, _random_allowed(q, rng, allow_prob, must_contain=(int(hidden[u]), int(hidden[v])))))
        inst = CspInstance(n=n, q=q, edges=normalize_edges(edges), name=f"planted-n{n}-q{q}-m{m}-s{seed}")
        return GeneratedInstance(require_valid(inst), hidden=hidden, info={"m": m})

    if kind == "random-csp":
        n, q, m = int(params["n"]), int(params["q"]), int(params["m"])
        allow_prob = float(params.get("allow_prob", 0.5))
        edge_list = _random_edge_set(n, m, rng)
        edges = [(u, v, _random_allowed(q, rng, allow_prob)) for u, v in edge_list]
        inst = CspInstance(n=n, q=q, edges=normalize_edges(edges), name=f"randomcsp-n{n}-q{q}-m{m}-s{seed}")
        return GeneratedInstance(require_valid(inst), info={"m": m})

    raise ValueError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")
