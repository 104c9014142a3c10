"""Slow, independent reference implementations used by the tests.

Nothing here imports the package's numerical kernels: residuals are
recomputed with a plain loop, derivatives by central differences and the
information as a dense matrix.
"""

import numpy as np


def tarma_restricted_residuals(x, phi0, theta, phi10, phi11, r):
    """e_t = dX_t - phi0 - (phi10 + phi11 X_{t-1}) I(X_{t-1} <= r) + theta e_{t-1}."""
    x = np.asarray(x, dtype=float)
    e = np.zeros(x.size - 1)
    prev = 0.0
    for t in range(1, x.size):
        ind = 1.0 if x[t - 1] <= r else 0.0
        prev = x[t] - x[t - 1] - phi0 - (phi10 + phi11 * x[t - 1]) * ind + theta * prev
        e[t - 1] = prev
    return e


def residual_jacobian(x, phi0, theta, r, step=1e-6):
    """Central differences of the residuals in (phi0, theta, phi10, phi11) at psi_2 = 0."""
    base = np.array([phi0, theta, 0.0, 0.0])
    cols = []
    for j in range(4):
        d = np.zeros(4)
        d[j] = step
        hi = tarma_restricted_residuals(x, *(base + d), r)
        lo = tarma_restricted_residuals(x, *(base - d), r)
        cols.append((hi - lo) / (2 * step))
    return np.column_stack(cols)


def gaussian_loglik(x, phi0, theta, sigma2, phi10, phi11, r):
    e = tarma_restricted_residuals(x, phi0, theta, phi10, phi11, r)
    return -0.5 * e.size * np.log(2 * np.pi * sigma2) - e @ e / (2 * sigma2)


def lm_stat_bruteforce(x, phi0, theta, sigma2, r, step=1e-6):
    """LM statistic from a finite-difference score and a dense 5x5 information.

    Parameter order (phi0, theta, sigma2, phi10, phi11). The sigma2 row and
    column hold only the diagonal n / (2 sigma2^2).
    """
    score = np.empty(2)
    for j in range(2):
        d = np.zeros(2)
        d[j] = step
        up = gaussian_loglik(x, phi0, theta, sigma2, *d, r)
        dn = gaussian_loglik(x, phi0, theta, sigma2, *(-d), r)
        score[j] = (up - dn) / (2 * step)
    D = residual_jacobian(x, phi0, theta, r, step)
    n = D.shape[0]
    info = np.zeros((5, 5))
    idx = [0, 1, 3, 4]
    info[np.ix_(idx, idx)] = D.T @ D / sigma2
    info[2, 2] = n / (2 * sigma2 ** 2)
    i11, i12, i22 = info[:3, :3], info[:3, 3:], info[3:, 3:]
    schur = i22 - i12.T @ np.linalg.solve(i11, i12)
    return float(score @ np.linalg.solve(schur, score))


def regime_direct(phi10, phi11, phi20):
    """Long-run regime of the constrained model, conditions (i)-(v) read off one by one."""
    cond_i = phi11 < 1
    cond_ii = phi11 == 1 and phi10 > 0
    if phi20 < 0 and (cond_i or cond_ii):
        return "ergodic"
    cond_iii = phi11 == 1 and phi20 == 0 and phi10 >= 0
    cond_iv = phi11 == 1 and phi20 < 0 and phi10 == 0
    cond_v = phi11 < 1 and phi20 == 0
    if cond_iii or cond_iv or cond_v:
        return "null_recurrent"
    return "transient"


def tarma_residuals_loop(x, phi, th_lo, th_up, r):
    """e_t = X_t - regime AR part + theta_regime(t) e_{t-1}, e_0 = 0."""
    x = np.asarray(x, dtype=float)
    e = np.zeros(x.size - 1)
    prev = 0.0
    for t in range(1, x.size):
        low = x[t - 1] <= r
        mean = (phi[0] + phi[1] * x[t - 1]) if low else (phi[2] + phi[3] * x[t - 1])
        prev = x[t] - mean + (th_lo if low else th_up) * prev
        e[t - 1] = prev
    return e


def tarma_profile_ssr(x, th_lo, th_up, r):
    """Minimum SSR over the AR coefficients at fixed MA coefficients, by lstsq.

    The residuals are affine in phi, so the Jacobian columns are the residual
    responses to unit changes of each coefficient.
    """
    base = tarma_residuals_loop(x, np.zeros(4), th_lo, th_up, r)
    cols = []
    for j in range(4):
        d = np.zeros(4)
        d[j] = 1.0
        cols.append(tarma_residuals_loop(x, d, th_lo, th_up, r) - base)
    J = np.column_stack(cols)
    phi, *_ = np.linalg.lstsq(J, -base, rcond=None)
    e = base + J @ phi
    return float(e @ e), phi
