# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Faddeev-LeVerrier transfer coefficients and the
Levenberg-Marquardt inner loop used by the parameter solver.

Mirrors ``_kernels_py`` exactly; `hamid._backend` picks whichever lane
is available. Matrices here are tiny (K <= ~16), so everything is plain
C loops over contiguous buffers.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


cdef void _fadlev(double[:, ::1] a, double[:, ::1] c, double[::1] x0,
                  double[::1] den, double[:, ::1] num,
                  double[:, ::1] nmat, double[:, ::1] mmat,
                  double[::1] nx) noexcept:
    cdef Py_ssize_t k = a.shape[0], p = c.shape[0]
    cdef Py_ssize_t i, j, l, step
    cdef double acc, tr, comp, val, tmp
    for i in range(k):
        for j in range(k):
            nmat[i, j] = 1.0 if i == j else 0.0
    den[0] = 1.0
    for step in range(1, k + 1):
        for i in range(k):
            acc = 0.0
            for j in range(k):
                acc += nmat[i, j] * x0[j]
            nx[i] = acc
        for l in range(p):
            acc = 0.0
            for j in range(k):
                acc += c[l, j] * nx[j]
            num[l, step - 1] = acc
        # mmat = a @ nmat, trace with Kahan compensation
        tr = 0.0
        comp = 0.0
        for i in range(k):
            for j in range(k):
                acc = 0.0
                for l in range(k):
                    acc += a[i, l] * nmat[l, j]
                mmat[i, j] = acc
        for i in range(k):
            val = mmat[i, i] - comp
            tmp = tr + val
            comp = (tmp - tr) - val
            tr = tmp
        den[step] = -tr / step
        for i in range(k):
            for j in range(k):
                nmat[i, j] = mmat[i, j]
            nmat[i, i] += den[step]


def transfer_coeffs(a, c, x0):
    """Monic characteristic polynomial (descending) and per-channel
    numerator coefficients (descending) of C (sI - A)^-1 x0."""
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    c2 = np.atleast_2d(np.ascontiguousarray(c, dtype=np.float64))
    cdef double[:, ::1] cv = c2
    cdef double[::1] xv = np.ascontiguousarray(x0, dtype=np.float64)
    cdef Py_ssize_t k = av.shape[0]
    if av.shape[1] != k or cv.shape[1] != k or xv.shape[0] != k:
        raise ValueError("inconsistent shapes for (A, C, x0)")
    den = np.empty(k + 1)
    num = np.empty((c2.shape[0], k))
    scratch_n = np.empty((k, k))
    scratch_m = np.empty((k, k))
    scratch_x = np.empty(k)
    _fadlev(av, cv, xv, den, num, scratch_n, scratch_m, scratch_x)
    return den, num


def coeff_vector(a, c, x0):
    """Flat coefficient vector: den[1:] then the channel numerators."""
    den, num = transfer_coeffs(a, c, x0)
    return np.concatenate([den[1:], num.ravel()])


cdef void _build_a(double[:, ::1] base, double[:, :, ::1] mats,
                   double[::1] theta, double[:, ::1] a) noexcept:
    cdef Py_ssize_t k = base.shape[0], n_par = mats.shape[0]
    cdef Py_ssize_t i, j, m
    cdef double th
    for i in range(k):
        for j in range(k):
            a[i, j] = base[i, j]
    for m in range(n_par):
        th = theta[m]
        if th != 0.0:
            for i in range(k):
                for j in range(k):
                    a[i, j] += th * mats[m, i, j]


cdef void _stacked_residual(double[::1] theta, double[:, ::1] base,
                            double[:, :, ::1] mats, double[:, ::1] c,
                            double[:, ::1] x0s, double[:, ::1] targets,
                            double[:, ::1] invw, double[::1] out,
                            double[:, ::1] a, double[::1] den,
                            double[:, ::1] num, double[:, ::1] nmat,
                            double[:, ::1] mmat, double[::1] nx) noexcept:
    cdef Py_ssize_t k = base.shape[0], p = c.shape[0]
    cdef Py_ssize_t n_tgt = targets.shape[0], m = targets.shape[1]
    cdef Py_ssize_t t, i, l, off
    _build_a(base, mats, theta, a)
    for t in range(n_tgt):
        _fadlev(a, c, x0s[t], den, num, nmat, mmat, nx)
        off = t * m
        for i in range(k):
            out[off + i] = (den[i + 1] - targets[t, i]) * invw[t, i]
        for l in range(p):
            for i in range(k):
                out[off + k + l * k + i] = \
                    (num[l, i] - targets[t, k + l * k + i]) * invw[t, k + l * k + i]


cdef int _cholesky_solve(double[:, ::1] mat, double[::1] rhs,
                         double[::1] sol, double[:, ::1] chol,
                         double[::1] work) noexcept:
    """Solve mat @ sol = rhs for SPD mat; returns 0 on success, 1 if not PD."""
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t i, j, l
    cdef double acc
    for i in range(n):
        for j in range(i + 1):
            acc = mat[i, j]
            for l in range(j):
                acc -= chol[i, l] * chol[j, l]
            if i == j:
                if acc <= 0.0:
                    return 1
                chol[i, i] = sqrt(acc)
            else:
                chol[i, j] = acc / chol[j, j]
    for i in range(n):
        acc = rhs[i]
        for l in range(i):
            acc -= chol[i, l] * work[l]
        work[i] = acc / chol[i, i]
    for i in range(n - 1, -1, -1):
        acc = work[i]
        for l in range(i + 1, n):
            acc -= chol[l, i] * sol[l]
        sol[i] = acc / chol[i, i]
    return 0


def lm_fit(base, mats, c, x0s, targets, inv_weights, theta0,
           int max_iter=200, double gtol=1e-12, double xtol=1e-14):
    """Levenberg-Marquardt on the weighted coefficient residual.

    Same contract as the pure lane: A(theta) = base + sum theta_m mats[m],
    residual per target is (coefficients - target) * inv_weight, Jacobian
    by forward differences with step 1e-6 * max(1, |theta_i|). Returns
    (theta, iterations, status 0..3).
    """
    cdef double[:, ::1] base_v = np.ascontiguousarray(base, dtype=np.float64)
    cdef double[:, :, ::1] mats_v = np.ascontiguousarray(mats, dtype=np.float64)
    c2 = np.atleast_2d(np.ascontiguousarray(c, dtype=np.float64))
    cdef double[:, ::1] c_v = c2
    x0s2 = np.atleast_2d(np.ascontiguousarray(x0s, dtype=np.float64))
    cdef double[:, ::1] x0s_v = x0s2
    tg2 = np.atleast_2d(np.ascontiguousarray(targets, dtype=np.float64))
    cdef double[:, ::1] tg_v = tg2
    iw2 = np.atleast_2d(np.ascontiguousarray(inv_weights, dtype=np.float64))
    cdef double[:, ::1] iw_v = iw2

    theta_arr = np.array(theta0, dtype=np.float64)
    cdef double[::1] theta = theta_arr
    cdef Py_ssize_t n_par = theta.shape[0]
    cdef Py_ssize_t k = base_v.shape[0], p = c_v.shape[0]
    cdef Py_ssize_t n_tgt = tg_v.shape[0]
    cdef Py_ssize_t m_tot = n_tgt * tg_v.shape[1]

    a = np.empty((k, k)); den = np.empty(k + 1); num = np.empty((p, k))
    nmat = np.empty((k, k)); mmat = np.empty((k, k)); nx = np.empty(k)
    cdef double[:, ::1] a_v = a, nmat_v = nmat, mmat_v = mmat, num_v = num
    cdef double[::1] den_v = den, nx_v = nx

    res = np.empty(m_tot); res_new = np.empty(m_tot); res_probe = np.empty(m_tot)
    jac = np.empty((m_tot, n_par))
    jtj = np.empty((n_par, n_par)); damped = np.empty((n_par, n_par))
    grad = np.empty(n_par); trial = np.empty(n_par); probe = np.empty(n_par)
    theta_new = np.empty(n_par)
    chol = np.empty((n_par, n_par)); work = np.empty(n_par)
    neg_grad = np.empty(n_par)
    cdef double[::1] res_v = res, resn_v = res_new, resp_v = res_probe
    cdef double[:, ::1] jac_v = jac, jtj_v = jtj, damped_v = damped
    cdef double[:, ::1] chol_v = chol
    cdef double[::1] grad_v = grad, trial_v = trial, probe_v = probe
    cdef double[::1] thn_v = theta_new, work_v = work, ng_v = neg_grad

    cdef double cost, cost_new, lam = -1.0, nu = 2.0
    cdef double h, gmax, dmax, acc, pred, rho, step_norm, th_norm
    cdef Py_ssize_t i, j, l, it = 0, inner
    cdef int status = 2, fail

    _stacked_residual(theta, base_v, mats_v, c_v, x0s_v, tg_v, iw_v, res_v,
                      a_v, den_v, num_v, nmat_v, mmat_v, nx_v)
    cost = 0.0
    for i in range(m_tot):
        cost += res_v[i] * res_v[i]
    cost *= 0.5

    for it in range(1, max_iter + 1):
        for j in range(n_par):
            h = 1e-6 * (1.0 if fabs(theta[j]) < 1.0 else fabs(theta[j]))
            for l in range(n_par):
                probe_v[l] = theta[l]
            probe_v[j] += h
            _stacked_residual(probe_v, base_v, mats_v, c_v, x0s_v, tg_v, iw_v,
                              resp_v, a_v, den_v, num_v, nmat_v, mmat_v, nx_v)
            for i in range(m_tot):
                jac_v[i, j] = (resp_v[i] - res_v[i]) / h
        gmax = 0.0
        for j in range(n_par):
            acc = 0.0
            for i in range(m_tot):
                acc += jac_v[i, j] * res_v[i]
            grad_v[j] = acc
            if fabs(acc) > gmax:
                gmax = fabs(acc)
        for j in range(n_par):
            for l in range(j, n_par):
                acc = 0.0
                for i in range(m_tot):
                    acc += jac_v[i, j] * jac_v[i, l]
                jtj_v[j, l] = acc
                jtj_v[l, j] = acc
        if gmax <= gtol:
            status = 0
            break
        if lam < 0.0:
            dmax = 1e-14
            for j in range(n_par):
                if jtj_v[j, j] > dmax:
                    dmax = jtj_v[j, j]
            lam = 1e-3 * dmax
        step_norm = -1.0
        for inner in range(60):
            for j in range(n_par):
                for l in range(n_par):
                    damped_v[j, l] = jtj_v[j, l]
                acc = jtj_v[j, j]
                if acc < 1e-14:
                    acc = 1e-14
                damped_v[j, j] += lam * acc
                ng_v[j] = -grad_v[j]
            fail = _cholesky_solve(damped_v, ng_v, trial_v, chol_v, work_v)
            if fail:
                lam = lam * 10.0 if lam * 10.0 < 1e14 else 1e14
                continue
            for j in range(n_par):
                thn_v[j] = theta[j] + trial_v[j]
            _stacked_residual(thn_v, base_v, mats_v, c_v, x0s_v, tg_v, iw_v,
                              resn_v, a_v, den_v, num_v, nmat_v, mmat_v, nx_v)
            cost_new = 0.0
            for i in range(m_tot):
                cost_new += resn_v[i] * resn_v[i]
            cost_new *= 0.5
            if cost_new < cost:
                pred = 0.0
                for j in range(n_par):
                    acc = 0.0
                    for l in range(n_par):
                        acc += jtj_v[j, l] * trial_v[l]
                    pred -= grad_v[j] * trial_v[j] + 0.5 * trial_v[j] * acc
                if pred < 1e-300:
                    pred = 1e-300
                rho = (cost - cost_new) / pred
                acc = 1.0 - (2.0 * rho - 1.0) ** 3
                if acc < 1.0 / 3.0:
                    acc = 1.0 / 3.0
                lam = lam * acc
                if lam < 1e-12:
                    lam = 1e-12
                nu = 2.0
                step_norm = 0.0
                th_norm = 0.0
                for j in range(n_par):
                    step_norm += trial_v[j] * trial_v[j]
                    theta[j] = thn_v[j]
                    th_norm += theta[j] * theta[j]
                step_norm = sqrt(step_norm)
                th_norm = sqrt(th_norm)
                for i in range(m_tot):
                    res_v[i] = resn_v[i]
                cost = cost_new
                break
            lam = lam * nu if lam * nu < 1e14 else 1e14
            nu = nu * 2.0 if nu * 2.0 < 1e8 else 1e8
            if lam >= 1e14:
                break
        if step_norm < 0.0:
            status = 3
            break
        if step_norm <= xtol * (th_norm + xtol):
            status = 1
            break
    return theta_arr, it, status
