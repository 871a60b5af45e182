"""Pure-NumPy twin of the compiled kernels.

Implements exactly the same algorithms as ``_kernels.pyx`` (transfer
coefficients via Faddeev-LeVerrier, Levenberg-Marquardt with forward
finite differences), so the two lanes are interchangeable up to
floating-point roundoff. Selected by ``hamid._backend`` when the
extension is unavailable or ``HAMID_PURE_PYTHON=1``.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"


def transfer_coeffs(a, c, x0):
    """Characteristic polynomial and numerator coefficients of C (sI-A)^-1 x0.

    Returns ``(den, num)`` with ``den`` of shape (K+1,) holding the monic
    characteristic polynomial in descending powers, and ``num`` of shape
    (p, K) holding each channel's numerator in descending powers.
    Faddeev-LeVerrier adjugate recursion; traces use compensated
    summation so the tiny matrices stay exact to the last few ulps.
    """
    a = np.ascontiguousarray(a, dtype=float)
    c = np.atleast_2d(np.ascontiguousarray(c, dtype=float))
    x0 = np.ascontiguousarray(x0, dtype=float)
    k = a.shape[0]
    if a.shape != (k, k) or c.shape[1] != k or x0.shape != (k,):
        raise ValueError("inconsistent shapes for (A, C, x0)")
    den = np.empty(k + 1)
    num = np.empty((c.shape[0], k))
    den[0] = 1.0
    n_mat = np.eye(k)
    for step in range(1, k + 1):
        num[:, step - 1] = c @ (n_mat @ x0)
        m_mat = a @ n_mat
        coeff = -math.fsum(m_mat.diagonal().tolist()) / step
        den[step] = coeff
        n_mat = m_mat
        n_mat[np.diag_indices(k)] += coeff
    return den, num


def coeff_vector(a, c, x0):
    """Flat coefficient vector: den[1:] then the channel numerators."""
    den, num = transfer_coeffs(a, c, x0)
    return np.concatenate([den[1:], num.ravel()])


def _residual(theta, base, mats, c, x0s, targets, inv_weights):
    a = base + np.tensordot(theta, mats, axes=1)
    out = np.empty(targets.size)
    m = targets.shape[1]
    for t in range(targets.shape[0]):
        vec = coeff_vector(a, c, x0s[t])
        out[t * m:(t + 1) * m] = (vec - targets[t]) * inv_weights[t]
    return out


def lm_fit(base, mats, c, x0s, targets, inv_weights, theta0,
           max_iter=200, gtol=1e-12, xtol=1e-14):
    """Levenberg-Marquardt on the weighted coefficient residual.

    theta parameterizes A(theta) = base + sum_m theta_m mats[m]; the
    residual stacks, per target, (coefficients - target) * inv_weight.
    Entries with inv_weight 0 are excluded. The Jacobian uses forward
    differences with step 1e-6 * max(1, |theta_i|).

    Returns ``(theta, iterations, status)`` with status 0 = gradient
    converged, 1 = step converged, 2 = iteration limit, 3 = stalled.
    """
    base = np.ascontiguousarray(base, dtype=float)
    mats = np.ascontiguousarray(mats, dtype=float)
    c = np.atleast_2d(np.ascontiguousarray(c, dtype=float))
    x0s = np.atleast_2d(np.ascontiguousarray(x0s, dtype=float))
    targets = np.atleast_2d(np.ascontiguousarray(targets, dtype=float))
    inv_weights = np.atleast_2d(np.ascontiguousarray(inv_weights, dtype=float))
    theta = np.array(theta0, dtype=float)
    n_par = theta.size

    res = _residual(theta, base, mats, c, x0s, targets, inv_weights)
    cost = 0.5 * float(res @ res)
    lam = -1.0
    nu = 2.0
    status = 2
    it = 0
    jac = np.empty((res.size, n_par))
    for it in range(1, max_iter + 1):
        for i in range(n_par):
            h = 1e-6 * max(1.0, abs(theta[i]))
            probe = theta.copy()
            probe[i] += h
            jac[:, i] = (_residual(probe, base, mats, c, x0s, targets,
                                   inv_weights) - res) / h
        grad = jac.T @ res
        jtj = jac.T @ jac
        if np.max(np.abs(grad)) <= gtol:
            status = 0
            break
        if lam < 0.0:
            lam = 1e-3 * max(float(np.max(np.diag(jtj))), 1e-14)
        step = None
        for _ in range(60):
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-14))
            try:
                chol = np.linalg.cholesky(damped)
            except np.linalg.LinAlgError:
                lam = min(lam * 10.0, 1e14)
                continue
            trial = np.linalg.solve(chol.T, np.linalg.solve(chol, -grad))
            res_new = _residual(theta + trial, base, mats, c, x0s, targets,
                                inv_weights)
            cost_new = 0.5 * float(res_new @ res_new)
            if cost_new < cost:
                pred = -(grad @ trial + 0.5 * trial @ (jtj @ trial))
                rho = (cost - cost_new) / max(pred, 1e-300)
                lam = max(lam * max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3),
                          1e-12)
                nu = 2.0
                theta = theta + trial
                res = res_new
                cost = cost_new
                step = trial
                break
            lam = min(lam * nu, 1e14)
            nu = min(2.0 * nu, 1e8)
            if lam >= 1e14:
                break
        if step is None:
            status = 3
            break
        if np.linalg.norm(step) <= xtol * (np.linalg.norm(theta) + xtol):
            status = 1
            break
    return theta, it, status
