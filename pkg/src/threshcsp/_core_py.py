"""Pure-numpy kernel for the per-net-point moment SDP.

Splitting scheme on the symmetric-vectorized moment matrix: alternate
(a) projection onto the PSD cone via eigendecomposition with (b) exact
projection onto the affine constraint set intersected with the ball
halfspace (whose Lagrange multiplier is the ball dual), with scaled dual
updates, residual-balancing penalty adaptation, and over-relaxation.
A Dykstra polish pass afterwards drives joint feasibility to tolerance
without materially moving the objective.

The compiled extension `_core` implements the same loop; this module is the
fallback and the reference for its behaviour.
"""

from __future__ import annotations

import numpy as np

STATUS_SOLVED = 0
STATUS_INFEASIBLE = 1
STATUS_MAXITER = 2

SQRT2 = float(np.sqrt(2.0))

# plateau exit: consecutive residual windows improving by less than this
# fraction end the run early (tangent-ball points converge sublinearly and
# would otherwise burn the whole iteration budget)
PLATEAU_REL = 1e-3
PLATEAU_WINDOWS = 4


def _unsvec(v, svec_i, svec_j, d):
    G = np.zeros((d, d))
    off = svec_i != svec_j
    vals = np.where(off, v / SQRT2, v)
    G[svec_i, svec_j] = vals
    G[svec_j, svec_i] = vals
    return G


def _svec(G, svec_i, svec_j):
    off = svec_i != svec_j
    return np.where(off, G[svec_i, svec_j] * SQRT2, G[svec_i, svec_j])


def _psd_proj(v, svec_i, svec_j, d):
    vals, vecs = np.linalg.eigh(_unsvec(v, svec_i, svec_j, d))
    pos = vals > 0.0
    if not pos.any():
        return np.zeros_like(v)
    R = vecs[:, pos] * np.sqrt(vals[pos])[None, :]
    return _svec(R @ R.T, svec_i, svec_j)


def admm_solve(c_svec, basis, mode, z0, bq, p_svec, pt_svec, ptn2, s_ball, use_ball,
               svec_i, svec_j, dmat, x_start, w_start,
               rho0, alpha, max_iter, eps_abs, eps_rel, adapt_every,
               stall_window, stall_rel, ball_tol, polish_tol, polish_max):
    """Maximize <c_svec, z> over the PSD cone intersected with the constraints.

    Returns (z_final, info).  `basis` holds orthonormal rows; mode 0 spans the
    affine directions (null space of the constraints, particular solution z0),
    mode 1 spans the constraint row space with right-hand side bq.
    """
    D = c_svec.shape[0]
    sqrt_D = np.sqrt(D)

    def proj_poly(g):
        if mode == 0:
            z = z0 + basis.T @ (basis @ g)
        else:
            z = g + basis.T @ (bq - basis @ g)
        if use_ball and ptn2 > 1e-14:
            gap = float(p_svec @ z) - s_ball
            if gap > 0.0:
                z = z - (gap / ptn2) * pt_svec
        return z

    rho = rho0
    c_over_rho = c_svec / rho
    z = proj_poly(np.asarray(x_start, dtype=np.float64).copy())
    w = np.asarray(w_start, dtype=np.float64).copy()

    status = STATUS_MAXITER
    iters = max_iter
    r_prim = r_dual = np.inf
    stall_prev = np.inf
    wmin = np.inf
    plateau = 0
    x = z

    for it in range(1, max_iter + 1):
        x = _psd_proj(z - w, svec_i, svec_j, dmat)
        xh = alpha * x + (1.0 - alpha) * z
        z_new = proj_poly(xh + w + c_over_rho)
        w += xh - z_new
        r_prim = float(np.linalg.norm(x - z_new))
        r_dual = float(rho * np.linalg.norm(z_new - z))
        z = z_new

        eps_p = eps_abs * sqrt_D + eps_rel * max(float(np.linalg.norm(x)), float(np.linalg.norm(z)))
        eps_d = eps_abs * sqrt_D + eps_rel * rho * float(np.linalg.norm(w))
        if r_prim <= eps_p and r_dual <= eps_d:
            status = STATUS_SOLVED
            iters = it
            break

        wmin = min(wmin, r_prim)
        if use_ball and it % 100 == 0:
            ball_viol = max(0.0, float(p_svec @ x) - s_ball)
            # infeasible fixed point: iterate differences settled while the
            # consensus gap and ball violation persist
            if r_dual <= eps_d and r_prim > 100.0 * eps_p and ball_viol > 10.0 * ball_tol:
                status = STATUS_INFEASIBLE
                iters = it
                break
            if it % stall_window == 0:
                if (stall_prev - wmin) < stall_rel * stall_prev and ball_viol > 10.0 * ball_tol \
                        and r_prim > 100.0 * eps_p:
                    status = STATUS_INFEASIBLE
                    iters = it
                    break
                if (stall_prev - wmin) < PLATEAU_REL * stall_prev and r_prim > 100.0 * eps_p:
                    plateau += 1
                    if plateau >= PLATEAU_WINDOWS:
                        iters = it  # sublinear tail; give up early as unresolved
                        break
                else:
                    plateau = 0
                stall_prev = wmin
                wmin = np.inf

        if it % adapt_every == 0:
            if r_prim > 10.0 * r_dual and rho < rho0 * 1e8:
                rho *= 2.0
                w *= 0.5
                c_over_rho = c_svec / rho
            elif r_dual > 10.0 * r_prim and rho > rho0 * 1e-8:
                rho *= 0.5
                w *= 2.0
                c_over_rho = c_svec / rho

    polish_res = 0.0
    polish_iters = 0
    if status != STATUS_INFEASIBLE:
        a = z
        pc = np.zeros_like(z)
        qc = np.zeros_like(z)
        polish_res = np.inf
        polish_prev = np.inf
        for t in range(1, polish_max + 1):
            y = _psd_proj(a + pc, svec_i, svec_j, dmat)
            pc = a + pc - y
            b2 = proj_poly(y + qc)
            qc = y + qc - b2
            polish_res = float(np.linalg.norm(y - b2))
            a = b2
            polish_iters = t
            if polish_res <= polish_tol:
                break
            if t % 200 == 0:
                if (polish_prev - polish_res) < PLATEAU_REL * polish_prev:
                    break
                polish_prev = polish_res
        z = a

    info = {
        "status": int(status),
        "iterations": int(iters),
        "r_primal": float(r_prim),
        "r_dual": float(r_dual),
        "rho": float(rho),
        "objective": float(c_svec @ z),
        "ball_value": float(p_svec @ z),
        "polish_residual": float(polish_res),
        "polish_iterations": int(polish_iters),
    }
    return z, info
