# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel for the per-net-point moment SDP.

Same splitting scheme as `_core_py.admm_solve` (the reference backend), with
the eigendecomposition, constraint projections, and vector updates done via
direct LAPACK/BLAS calls to strip per-iteration Python overhead.
"""

import numpy as np

from libc.math cimport sqrt, INFINITY
from libc.string cimport memset
from scipy.linalg.cython_lapack cimport dsyevd
from scipy.linalg.cython_blas cimport dgemv, dsyrk, ddot, dnrm2, daxpy, dcopy

STATUS_SOLVED = 0
STATUS_INFEASIBLE = 1
STATUS_MAXITER = 2

cdef int _ST_SOLVED = 0
cdef int _ST_INFEASIBLE = 1
cdef int _ST_MAXITER = 2

# plateau exit thresholds, mirroring _core_py
cdef double _PLATEAU_REL = 1e-3
cdef int _PLATEAU_WINDOWS = 4


cdef void _unsvec_upper(double[::1] v, int[::1] si, int[::1] sj, int d, double[::1] G) noexcept nogil:
    # fill the row-major upper triangle of G (= LAPACK column-major lower)
    cdef Py_ssize_t t
    cdef int i, j
    cdef double invs = 1.0 / sqrt(2.0)
    for t in range(v.shape[0]):
        i = si[t]
        j = sj[t]
        if i == j:
            G[i * d + j] = v[t]
        else:
            G[i * d + j] = v[t] * invs


cdef int _psd_proj(double[::1] v, int[::1] si, int[::1] sj, int d,
                   double[::1] G, double[::1] S, double[::1] X,
                   double[::1] evals, double[::1] work, int[::1] iwork) noexcept nogil:
    cdef int info = 0, n = d, one_i = 1
    cdef int lwork = <int> work.shape[0]
    cdef int liwork = <int> iwork.shape[0]
    cdef char *jobz = b'V'
    cdef char *uplo = b'L'
    cdef char *trans = b'N'
    cdef int npos = 0, s, i
    cdef Py_ssize_t t
    cdef int ii, jj
    cdef double lam, sq2 = sqrt(2.0), one = 1.0, zero = 0.0

    _unsvec_upper(v, si, sj, d, G)
    dsyevd(jobz, uplo, &n, &G[0], &n, &evals[0], &work[0], &lwork, &iwork[0], &liwork, &info)
    if info != 0:
        return info
    # eigenvectors are the rows of G in our row-major view; eigenvalues ascend
    for s in range(d):
        if evals[s] > 0.0:
            lam = sqrt(evals[s])
            for i in range(d):
                S[npos * d + i] = G[s * d + i] * lam
            npos += 1
    memset(&X[0], 0, d * d * sizeof(double))
    if npos > 0:
        dsyrk(uplo, trans, &n, &npos, &one, &S[0], &n, &zero, &X[0], &n)
    for t in range(v.shape[0]):
        ii = si[t]
        jj = sj[t]
        if ii == jj:
            v[t] = X[ii * d + jj]
        else:
            v[t] = X[ii * d + jj] * sq2
    return 0


cdef void _proj_poly(double[::1] g, double[:, ::1] basis, int mode,
                     double[::1] z0, double[::1] bq,
                     double[::1] p, double[::1] pt, double ptn2,
                     double s_ball, int use_ball,
                     double[::1] u, double[::1] z) noexcept nogil:
    cdef int D = <int> g.shape[0]
    cdef int nb = <int> basis.shape[0]
    cdef int one_i = 1, t
    cdef double one = 1.0, zero = 0.0, gap, coef
    cdef char *cn = b'N'
    cdef char *ct = b'T'
    # basis is (nb, D) row-major == (D, nb) column-major; rows are LAPACK columns
    if nb > 0:
        dgemv(ct, &D, &nb, &one, &basis[0, 0], &D, &g[0], &one_i, &zero, &u[0], &one_i)
    if mode == 0:
        dcopy(&D, &z0[0], &one_i, &z[0], &one_i)
        if nb > 0:
            dgemv(cn, &D, &nb, &one, &basis[0, 0], &D, &u[0], &one_i, &one, &z[0], &one_i)
    else:
        for t in range(nb):
            u[t] = bq[t] - u[t]
        dcopy(&D, &g[0], &one_i, &z[0], &one_i)
        if nb > 0:
            dgemv(cn, &D, &nb, &one, &basis[0, 0], &D, &u[0], &one_i, &one, &z[0], &one_i)
    if use_ball and ptn2 > 1e-14:
        gap = ddot(&D, &p[0], &one_i, &z[0], &one_i) - s_ball
        if gap > 0.0:
            coef = -gap / ptn2
            daxpy(&D, &coef, &pt[0], &one_i, &z[0], &one_i)


def admm_solve(double[::1] c_svec, double[:, ::1] basis, int mode,
               double[::1] z0, double[::1] bq,
               double[::1] p_svec, double[::1] pt_svec, double ptn2,
               double s_ball, int use_ball,
               int[::1] svec_i, int[::1] svec_j, int dmat,
               double[::1] x_start, double[::1] w_start,
               double rho0, double alpha, int max_iter,
               double eps_abs, double eps_rel, int adapt_every,
               int stall_window, double stall_rel, double ball_tol,
               double polish_tol, int polish_max):
    cdef int D = <int> c_svec.shape[0]
    cdef int d = dmat
    cdef int one_i = 1

    g_arr = np.empty(D, dtype=np.float64)
    x_arr = np.empty(D, dtype=np.float64)
    z_arr = np.empty(D, dtype=np.float64)
    w_arr = np.array(w_start, dtype=np.float64, copy=True)
    u_arr = np.empty(max(1, basis.shape[0]), dtype=np.float64)
    crho_arr = np.empty(D, dtype=np.float64)
    pc_arr = np.zeros(D, dtype=np.float64)
    qc_arr = np.zeros(D, dtype=np.float64)
    y_arr = np.empty(D, dtype=np.float64)

    Gm = np.empty(d * d, dtype=np.float64)
    Sm = np.empty(d * d, dtype=np.float64)
    Xm = np.empty(d * d, dtype=np.float64)
    evals_arr = np.empty(d, dtype=np.float64)
    work_arr = np.empty(1 + 6 * d + 2 * d * d, dtype=np.float64)
    iwork_arr = np.empty(3 + 5 * d, dtype=np.int32)

    cdef double[::1] g = g_arr, x = x_arr, z = z_arr, w = w_arr
    cdef double[::1] u = u_arr, crho = crho_arr
    cdef double[::1] pc = pc_arr, qc = qc_arr, y = y_arr
    cdef double[::1] G = Gm, S = Sm, X = Xm, evals = evals_arr, work = work_arr
    cdef int[::1] iwork = iwork_arr

    cdef double rho = rho0
    cdef double sqrt_D = sqrt(<double> D)
    cdef double r_prim = INFINITY, r_dual = INFINITY, stall_prev = INFINITY
    cdef double wmin = INFINITY, polish_prev = INFINITY
    cdef double eps_p = 0.0, eps_d = 0.0, nx, nz, nw, ball_viol, polish_res = 0.0
    cdef int status = _ST_MAXITER, iters = max_iter, it, t, lapack_err = 0
    cdef int polish_iters = 0, plateau = 0

    with nogil:
        for t in range(D):
            crho[t] = c_svec[t] / rho
            g[t] = x_start[t]
        _proj_poly(g, basis, mode, z0, bq, p_svec, pt_svec, ptn2, s_ball, use_ball, u, z)

        for it in range(1, max_iter + 1):
            for t in range(D):
                x[t] = z[t] - w[t]
            lapack_err = _psd_proj(x, svec_i, svec_j, d, G, S, X, evals, work, iwork)
            if lapack_err != 0:
                break
            for t in range(D):
                g[t] = alpha * x[t] + (1.0 - alpha) * z[t] + w[t] + crho[t]
            # y holds z_new
            _proj_poly(g, basis, mode, z0, bq, p_svec, pt_svec, ptn2, s_ball, use_ball, u, y)
            r_prim = 0.0
            r_dual = 0.0
            for t in range(D):
                w[t] += alpha * x[t] + (1.0 - alpha) * z[t] - y[t]
                r_prim += (x[t] - y[t]) * (x[t] - y[t])
                r_dual += (y[t] - z[t]) * (y[t] - z[t])
                z[t] = y[t]
            r_prim = sqrt(r_prim)
            r_dual = rho * sqrt(r_dual)

            nx = dnrm2(&D, &x[0], &one_i)
            nz = dnrm2(&D, &z[0], &one_i)
            nw = dnrm2(&D, &w[0], &one_i)
            eps_p = eps_abs * sqrt_D + eps_rel * (nx if nx > nz else nz)
            eps_d = eps_abs * sqrt_D + eps_rel * rho * nw
            if r_prim <= eps_p and r_dual <= eps_d:
                status = _ST_SOLVED
                iters = it
                break

            if wmin > r_prim:
                wmin = r_prim
            if use_ball and it % 100 == 0:
                ball_viol = ddot(&D, &p_svec[0], &one_i, &x[0], &one_i) - s_ball
                if ball_viol < 0.0:
                    ball_viol = 0.0
                # infeasible fixed point: iterate differences settled while the
                # consensus gap and ball violation persist
                if r_dual <= eps_d and r_prim > 100.0 * eps_p and ball_viol > 10.0 * ball_tol:
                    status = _ST_INFEASIBLE
                    iters = it
                    break
                if it % stall_window == 0:
                    if (stall_prev - wmin) < stall_rel * stall_prev and ball_viol > 10.0 * ball_tol \
                            and r_prim > 100.0 * eps_p:
                        status = _ST_INFEASIBLE
                        iters = it
                        break
                    if (stall_prev - wmin) < _PLATEAU_REL * stall_prev and r_prim > 100.0 * eps_p:
                        plateau += 1
                        if plateau >= _PLATEAU_WINDOWS:
                            iters = it  # sublinear tail; give up early as unresolved
                            break
                    else:
                        plateau = 0
                    stall_prev = wmin
                    wmin = INFINITY

            if it % adapt_every == 0:
                if r_prim > 10.0 * r_dual and rho < rho0 * 1e8:
                    rho *= 2.0
                    for t in range(D):
                        w[t] *= 0.5
                        crho[t] = c_svec[t] / rho
                elif r_dual > 10.0 * r_prim and rho > rho0 * 1e-8:
                    rho *= 0.5
                    for t in range(D):
                        w[t] *= 2.0
                        crho[t] = c_svec[t] / rho

        if status != _ST_INFEASIBLE and lapack_err == 0:
            polish_res = INFINITY
            for it in range(1, polish_max + 1):
                for t in range(D):
                    g[t] = z[t] + pc[t]
                    y[t] = g[t]
                lapack_err = _psd_proj(y, svec_i, svec_j, d, G, S, X, evals, work, iwork)
                if lapack_err != 0:
                    break
                for t in range(D):
                    pc[t] = g[t] - y[t]
                    g[t] = y[t] + qc[t]
                _proj_poly(g, basis, mode, z0, bq, p_svec, pt_svec, ptn2, s_ball, use_ball, u, x)
                polish_res = 0.0
                for t in range(D):
                    qc[t] = g[t] - x[t]
                    polish_res += (y[t] - x[t]) * (y[t] - x[t])
                    z[t] = x[t]
                polish_res = sqrt(polish_res)
                polish_iters = it
                if polish_res <= polish_tol:
                    break
                if it % 200 == 0:
                    if (polish_prev - polish_res) < _PLATEAU_REL * polish_prev:
                        break
                    polish_prev = polish_res

    if lapack_err != 0:
        raise np.linalg.LinAlgError(f"dsyevd failed with info={lapack_err}")

    z_out = z_arr
    info = {
        "status": int(status),
        "iterations": int(iters),
        "r_primal": float(r_prim),
        "r_dual": float(r_dual),
        "rho": float(rho),
        "objective": float(np.dot(np.asarray(c_svec), z_out)),
        "ball_value": float(np.dot(np.asarray(p_svec), z_out)),
        "polish_residual": float(polish_res),
        "polish_iterations": int(polish_iters),
    }
    return z_out, info
