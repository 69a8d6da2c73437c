"""Symmetric eigendecomposition, threshold ranks, top-eigenspace projectors,
and the constructive rank-comparison certificate for dominated signings.

Threshold rank of a symmetric matrix at level t counts eigenvalues >= t
(or <= -t on the negative side).  Counting is inclusive within COUNT_TOL of
the threshold so boundary eigenvalues behave deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COUNT_TOL = 1e-9
SYM_TOL = 1e-10
POWER_RESIDUAL = 1e-3
# internal Ritz-residual target; one order tighter than the capture contract
# so eigenvectors at or above 2*eps land inside the subspace within 1e-3
_POWER_RITZ_TOL = 1e-4


class PowerConvergenceError(RuntimeError):
    """Block power iteration hit its iteration cap before converging."""


def _check_symmetric(M: np.ndarray, what: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{what} must be square, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise ValueError(f"{what} has non-finite entries")
    if M.size and np.abs(M - M.T).max() > SYM_TOL * max(1.0, np.abs(M).max()):
        raise ValueError(f"{what} is not symmetric")
    return M


def _fix_signs(Q: np.ndarray) -> np.ndarray:
    """Deterministic sign convention: first non-negligible coordinate positive."""
    Q = Q.copy()
    for col in range(Q.shape[1]):
        v = Q[:, col]
        nz = np.flatnonzero(np.abs(v) > 1e-12 * max(1.0, np.abs(v).max()))
        if nz.size and v[nz[0]] < 0:
            Q[:, col] = -v
    return Q


@dataclass(frozen=True)
class SpectralData:
    """Full spectrum of a symmetric matrix; eigenvalues descending, orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    dim: int


@dataclass(frozen=True)
class Projector:
    """Orthonormal basis U of a retained eigenspace; the projector is U U^T."""

    basis: np.ndarray  # (dim, k)
    threshold: float

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.T @ x)


def eig_sym(M: np.ndarray) -> SpectralData:
    """Full symmetric eigendecomposition, eigenvalues sorted descending."""
    M = _check_symmetric(M)
    vals, vecs = np.linalg.eigh(M)
    order = np.argsort(vals)[::-1]
    return SpectralData(eigenvalues=vals[order], eigenvectors=_fix_signs(vecs[:, order]), dim=M.shape[0])


def threshold_rank(M, tau: float, side: str = "pos") -> int:
    """Number of eigenvalues >= tau (side='pos') or <= -tau (side='neg').

    Accepts a symmetric matrix or a precomputed 1-D eigenvalue array.
    """
    if tau <= 0:
        raise ValueError(f"threshold must be positive, got {tau}")
    arr = np.asarray(M, dtype=np.float64)
    eigs = arr if arr.ndim == 1 else eig_sym(arr).eigenvalues
    if side == "pos":
        return int(np.sum(eigs >= tau - COUNT_TOL))
    if side == "neg":
        return int(np.sum(eigs <= -tau + COUNT_TOL))
    raise ValueError(f"side must be 'pos' or 'neg', got {side!r}")


def top_eigenspace(M: np.ndarray, eps: float, mode: str = "exact", seed: int = 0) -> Projector:
    """Projector onto the eigenspace with eigenvalues >= eps.

    mode='exact' uses a dense decomposition.  mode='power' runs seeded block
    power iteration and returns a subspace of dimension <= rank_{>=eps}(M)
    whose Ritz pairs at or above eps have residual <= 1e-3; raises
    PowerConvergenceError at the iteration cap (callers fall back to exact).
    """
    M = _check_symmetric(M)
    top = np.abs(M).sum(axis=1).max() if M.size else 0.0  # cheap op-norm upper bound
    if mode == "exact":
        spec = eig_sym(M)
        keep = spec.eigenvalues >= eps - COUNT_TOL
        return Projector(basis=spec.eigenvectors[:, keep].copy(), threshold=eps)
    if mode == "power":
        basis = _power_top_eigenspace(M, eps, seed)
        return Projector(basis=basis, threshold=eps)
    raise ValueError(f"mode must be 'exact' or 'power', got {mode!r}")


def _power_top_eigenspace(M: np.ndarray, eps: float, seed: int) -> np.ndarray:
    """Guarded block power iteration: eigenvalues (values only) size the block,
    the iteration supplies the basis.  Retained Ritz values interlace the true
    spectrum from below, so the dimension never exceeds rank_{>=eps}(M)."""
    d = M.shape[0]
    if d == 0:
        return np.zeros((0, 0))
    k = int(np.sum(np.linalg.eigvalsh(M) >= eps - COUNT_TOL))
    if k == 0:
        return np.zeros((d, 0))
    cap = 64 * max(1, int(np.ceil(np.log2(max(2, d)))))
    rng = np.random.default_rng(seed)
    block = min(d, k + 4)  # guard vectors absorb slow convergence at the cut
    Q, _ = np.linalg.qr(rng.standard_normal((d, block)))
    for it in range(cap):
        Q, _ = np.linalg.qr(M @ Q)
        if it % 4 != 3 and it != cap - 1:
            continue
        T = Q.T @ M @ Q
        vals, S = np.linalg.eigh(T)
        order = np.argsort(vals)[::-1]
        ritz_vals, ritz_vecs = vals[order], Q @ S[:, order]
        resid = np.linalg.norm(M @ ritz_vecs[:, :k] - ritz_vecs[:, :k] * ritz_vals[None, :k], axis=0)
        if resid.max() <= _POWER_RITZ_TOL:
            keep = ritz_vals[:k] >= eps - COUNT_TOL
            return _fix_signs(ritz_vecs[:, :k][:, keep])
    raise PowerConvergenceError(f"block power iteration did not converge in {cap} iterations (block={block})")


# ---------------------------------------------------------------------------
# rank-comparison certificate for dominated signings


@dataclass(frozen=True)
class CertificateReport:
    """Measured certificate quantities for (A, B, lam, t) plus pass/fail."""

    t: int
    lam: float
    inner_a: float       # <A, V^T V>, must be >= lam^2
    frob_sq: float       # ||V^T V||_F^2, must be <= 1/t
    trace: float         # Tr(V^T V), must equal 1
    tol: float
    passed: bool


def _check_dominated_pair(A: np.ndarray, B: np.ndarray, tol: float = 1e-9):
    A = _check_symmetric(A, "A")
    B = _check_symmetric(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: A {A.shape} vs B {B.shape}")
    if A.min() < -tol:
        raise ValueError("A must be entrywise nonnegative")
    if (np.abs(B) - A).max() > tol:
        raise ValueError("|B| <= A entrywise dominance violated")
    op = np.linalg.eigvalsh(A)
    if max(abs(op[0]), abs(op[-1])) > 1.0 + 1e-6:
        raise ValueError(f"||A|| must be <= 1, got {max(abs(op[0]), abs(op[-1])):.6g}")
    return A, B


def rank_certificate(A: np.ndarray, B: np.ndarray, lam: float, t: int) -> CertificateReport:
    """Build the witness V from t top eigenvectors of B and measure the three
    certificate quantities: <A, V^T V> >= lam^2, ||V^T V||_F^2 <= 1/t, Tr = 1.

    Columns of V are v_i = w_i (x) w_i / ||w_i|| for w_i the rows of the
    scaled eigenvector matrix U (columns u_s / sqrt(t)); zero rows map to 0.
    """
    A, B = _check_dominated_pair(A, B)
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    spec = eig_sym(B)
    have = int(np.sum(spec.eigenvalues >= lam - COUNT_TOL))
    if have < t:
        raise ValueError(f"B has only {have} eigenvalues >= {lam}, need t={t}")
    U = spec.eigenvectors[:, :t] / np.sqrt(t)
    norms = np.linalg.norm(U, axis=1)  # ||w_i|| for rows w_i
    K = U @ U.T                        # K_ij = <w_i, w_j>
    denom = np.outer(norms, norms)
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(denom > 0, K**2 / denom, 0.0)  # G = V^T V
    dim = A.shape[0]
    tol = 1e-9 * dim
    inner_a = float(np.sum(A * G))
    frob_sq = float(np.sum(G * G))
    trace = float(np.trace(G))
    passed = (inner_a >= lam**2 - tol) and (frob_sq <= 1.0 / t + tol) and (abs(trace - 1.0) <= tol)
    return CertificateReport(t=t, lam=float(lam), inner_a=inner_a, frob_sq=frob_sq, trace=trace, tol=tol, passed=passed)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of the threshold-rank comparison between a nonnegative matrix A
    and a dominated signing B."""

    tau: float
    sigma: float
    rank_a: int          # rank_{>=tau}(A)
    b_threshold: float   # sqrt(tau*(1-sigma) + sigma)
    rank_b: int          # rank at b_threshold of B
    bound: float         # rank_a / sigma^2
    holds: bool
    corollary: dict | None = None


def verify_rank_bound(A: np.ndarray, B: np.ndarray, tau: float, sigma: float,
                      eps: float | None = None, q: int | None = None) -> BoundReport:
    """Check rank_{>=sqrt(tau(1-sigma)+sigma)}(B) <= rank_{>=tau}(A) / sigma^2.

    When B is the nq x nq label-extended matrix of an n x n base A (pass eps
    and q), the theorem is instantiated with ((1/q) A (x) J_q, B / q) and the
    specialization rank_{>=2q*eps}(B) <= rank_{>=eps^2}(A) / eps^4 is also
    reported in `corollary`.
    """
    if tau <= 0 or sigma <= 0:
        raise ValueError("tau and sigma must be positive")
    A = _check_symmetric(A, "A")
    B = _check_symmetric(B, "B")
    corollary = None
    if B.shape[0] != A.shape[0]:
        if q is None or B.shape[0] != A.shape[0] * q:
            raise ValueError(f"B dim {B.shape[0]} is neither A dim nor A dim * q")
        # per-block dominance |B_{(i,a),(j,b)}| <= A_ij
        n = A.shape[0]
        blocks = np.abs(B).reshape(n, q, n, q).max(axis=(1, 3))
        if (blocks - A).max() > 1e-9:
            raise ValueError("label-extended dominance |B_{(i,a),(j,b)}| <= A_ij violated")
        A_th = np.kron(A / q, np.ones((q, q)))
        B_th = B / q
    else:
        A_th, B_th = _check_dominated_pair(A, B)

    eigs_a = np.linalg.eigvalsh(A_th)
    eigs_b = np.linalg.eigvalsh(B_th)
    rank_a = threshold_rank(eigs_a, tau, "pos")
    b_threshold = float(np.sqrt(tau * (1.0 - sigma) + sigma))
    rank_b = threshold_rank(eigs_b, b_threshold, "pos")
    bound = rank_a / sigma**2
    holds = rank_b <= bound + COUNT_TOL

    if eps is not None and q is not None:
        eigs_base = np.linalg.eigvalsh(A)
        eigs_full = np.linalg.eigvalsh(B)
        rank_base = threshold_rank(eigs_base, eps**2, "pos")
        rank_ext = threshold_rank(eigs_full, 2.0 * q * eps, "pos")
        cor_bound = rank_base / eps**4
        corollary = {
            "eps": float(eps),
            "q": int(q),
            "rank_base": rank_base,
            "rank_ext": rank_ext,
            "bound": float(cor_bound),
            "holds": bool(rank_ext <= cor_bound + COUNT_TOL),
        }
        holds = holds and corollary["holds"]

    return BoundReport(tau=float(tau), sigma=float(sigma), rank_a=rank_a, b_threshold=b_threshold,
                       rank_b=rank_b, bound=float(bound), holds=bool(holds), corollary=corollary)


def random_dominated_pair(dim: int, rng: np.random.Generator, density: float = 0.6) -> tuple[np.ndarray, np.ndarray]:
    """Random admissible (A, B): A symmetric nonnegative with ||A|| <= 1 and
    B = A with symmetric entrywise factors in [-1, 1]."""
    raw = rng.random((dim, dim)) * (rng.random((dim, dim)) < density)
    A = np.triu(raw, 1)
    A = A + A.T + np.diag(rng.random(dim) * (rng.random(dim) < density))
    top = np.abs(np.linalg.eigvalsh(A)).max()
    if top > 0:
        A /= top * (1.0 + 1e-12)
    factors = np.triu(rng.uniform(-1.0, 1.0, (dim, dim)))
    factors = factors + np.triu(factors, 1).T
    return A, A * factors
