"""Compiled inner loops.

Index conventions: ``x`` holds ``X_0..X_n``; residual-indexed arrays hold
``t = 1..n`` at positions ``0..n-1``; ``xl = x[:-1]`` holds the lagged
threshold variable ``X_{t-1}`` at the same positions.
"""

import math

import numpy as np
from numba import njit

PROJ_TOL = 1e-10
COND_MAX = 1e12


@njit(cache=True)
def tarma_path(x0, eps, phi10, phi11, phi20, phi21, th_lo, th_up, r, d):
    n = eps.shape[0]
    x = np.empty(n + 1)
    x[0] = x0
    e_prev = 0.0
    for t in range(1, n + 1):
        lag = x[t - d] if t - d >= 0 else x0
        if lag <= r:
            x[t] = phi10 + phi11 * x[t - 1] + eps[t - 1] - th_lo * e_prev
        else:
            x[t] = phi20 + phi21 * x[t - 1] + eps[t - 1] - th_up * e_prev
        e_prev = eps[t - 1]
    return x


@njit(cache=True)
def tar_path(x0, eps, phi10, phi11, phi20, phi21, r):
    n = eps.shape[0]
    x = np.empty(n + 1)
    x[0] = x0
    for t in range(1, n + 1):
        if x[t - 1] <= r:
            x[t] = phi10 + phi11 * x[t - 1] + eps[t - 1]
        else:
            x[t] = phi20 + phi21 * x[t - 1] + eps[t - 1]
    return x


@njit(cache=True)
def garch_innovations(z, omega, alpha, beta, h0):
    n = z.shape[0]
    u = np.empty(n)
    h = np.empty(n)
    h_prev = h0
    u_prev = 0.0
    for t in range(n):
        h[t] = omega + alpha * u_prev * u_prev + beta * h_prev
        u[t] = math.sqrt(h[t]) * z[t]
        h_prev = h[t]
        u_prev = u[t]
    return u, h


@njit(cache=True)
def ima_residuals(dx, phi0, theta):
    n = dx.shape[0]
    e = np.empty(n)
    prev = 0.0
    for t in range(n):
        prev = dx[t] - phi0 + theta * prev
        e[t] = prev
    return e


@njit(cache=True)
def ima_profile(dx, theta, fix_phi0):
    """Return (ssr, phi0_hat) with phi0 concentrated out for a given theta."""
    e = 0.0
    w = 0.0
    see = 0.0
    sew = 0.0
    sww = 0.0
    for t in range(dx.shape[0]):
        e = dx[t] + theta * e
        w = 1.0 + theta * w
        see += e * e
        sew += e * w
        sww += w * w
    if fix_phi0:
        return see, 0.0
    phi0 = sew / sww
    return max(see - sew * phi0, 0.0), phi0


@njit(cache=True)
def _profile_step(dx, theta, fix_phi0):
    """SSR, phi0 and the Gauss-Newton step for the concentrated objective."""
    ssr, phi0 = ima_profile(dx, theta, fix_phi0)
    n = dx.shape[0]
    e = 0.0
    q = 0.0
    p = 0.0
    s_eq = 0.0
    s_qq = 0.0
    s_pq = 0.0
    s_pp = 0.0
    ssr_direct = 0.0
    for t in range(n):
        q = e + theta * q
        p = -1.0 + theta * p
        e = dx[t] - phi0 + theta * e
        ssr_direct += e * e
        s_eq += e * q
        s_qq += q * q
        s_pq += p * q
        s_pp += p * p
    h = s_qq
    if not fix_phi0:
        h -= s_pq * s_pq / s_pp
    step = 0.0
    if h > 0.0:
        step = -s_eq / h
    return ssr_direct, phi0, step


@njit(cache=True)
def fit_theta(dx, fix_phi0, lo, hi, n_grid):
    """Coarse grid, golden-section refinement, then Gauss-Newton polishing."""
    best_i = 0
    best_f = np.inf
    grid = np.linspace(lo, hi, n_grid)
    for i in range(n_grid):
        f, _ = ima_profile(dx, grid[i], fix_phi0)
        if f < best_f:
            best_f = f
            best_i = i
    a = grid[max(best_i - 1, 0)]
    b = grid[min(best_i + 1, n_grid - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, _ = ima_profile(dx, c, fix_phi0)
    fd, _ = ima_profile(dx, d, fix_phi0)
    while b - a > 1e-9:
        if fc <= fd:
            b = d
            d = c
            fd = fc
            c = b - invphi * (b - a)
            fc, _ = ima_profile(dx, c, fix_phi0)
        else:
            a = c
            c = d
            fc = fd
            d = a + invphi * (b - a)
            fd, _ = ima_profile(dx, d, fix_phi0)
    theta = 0.5 * (a + b)
    if best_i > 0 and best_i < n_grid - 1:
        lo_b = grid[best_i - 1]
        hi_b = grid[best_i + 1]
    else:
        lo_b = lo
        hi_b = hi
    ssr, phi0, step = _profile_step(dx, theta, fix_phi0)
    for _ in range(50):
        cand = theta + step
        if cand <= lo_b or cand >= hi_b:
            break
        ssr_c, phi0_c, step_c = _profile_step(dx, cand, fix_phi0)
        if ssr_c > ssr * (1.0 + 1e-12):
            break
        done = abs(step) <= 1e-15 * max(1.0, abs(theta))
        theta, ssr, phi0, step = cand, ssr_c, phi0_c, step_c
        if done:
            break
    return theta, phi0, ssr


@njit(cache=True)
def panels(xl, eps, theta, r):
    """The four derivative recursions of the residuals at threshold r."""
    n = eps.shape[0]
    d0 = np.empty(n)
    dth = np.empty(n)
    d10 = np.empty(n)
    d11 = np.empty(n)
    a0 = 0.0
    ath = 0.0
    a10 = 0.0
    a11 = 0.0
    e_prev = 0.0
    for t in range(n):
        ind = 1.0 if xl[t] <= r else 0.0
        a0 = -1.0 + theta * a0
        ath = e_prev + theta * ath
        a10 = -ind + theta * a10
        a11 = -xl[t] * ind + theta * a11
        d0[t] = a0
        dth[t] = ath
        d10[t] = a10
        d11[t] = a11
        e_prev = eps[t]
    return d0, dth, d10, d11


@njit(cache=True)
def quad_form(e_u, e_v, uu, uv, vv, pu, qu, pv, qv, ppp, ppq, pqq, sigma2):
    """LM quadratic form from sufficient sums; NaN when the Schur block degenerates."""
    det_p = ppp * pqq - ppq * ppq
    i00 = pqq / det_p
    i01 = -ppq / det_p
    i11 = ppp / det_p
    s00 = uu - (pu * (i00 * pu + i01 * qu) + qu * (i01 * pu + i11 * qu))
    s11 = vv - (pv * (i00 * pv + i01 * qv) + qv * (i01 * pv + i11 * qv))
    s01 = uv - (pu * (i00 * pv + i01 * qv) + qu * (i01 * pv + i11 * qv))
    if not (s00 > PROJ_TOL * uu) or not (s11 > PROJ_TOL * vv):
        return np.nan
    rho = s01 / math.sqrt(s00 * s11)
    arho = abs(rho)
    if arho >= 1.0 or (1.0 + arho) / (1.0 - arho) > COND_MAX:
        return np.nan
    a = e_u / math.sqrt(s00)
    b = e_v / math.sqrt(s11)
    val = (a * a - 2.0 * rho * a * b + b * b) / (1.0 - rho * rho) / sigma2
    return max(val, 0.0)


@njit(cache=True)
def window_length(theta, n):
    at = abs(theta)
    if at == 0.0:
        return 0
    if at >= 1.0:
        return n
    L = int(math.ceil(math.log(1e-18) / math.log(at)))
    return min(L, n)


@njit(cache=True)
def sup_curve(xl, xc, order, eps, theta, sigma2, lo, hi):
    """T_n(r) at every distinct lagged value in [lo, hi].

    Thresholds are visited in increasing order; adding observation k to the
    lower regime changes the lower-regime derivative columns by the impulse
    response g_k(t) = theta^(t-1-k), whose cross products have the closed
    form theta^|k-l| * c_max(k,l). Scores are running sums of back-filtered
    residuals. ``xc`` is the centred threshold variable.
    """
    n = eps.shape[0]
    p = np.empty(n)
    q = np.empty(n)
    a0 = 0.0
    ath = 0.0
    e_prev = 0.0
    for t in range(n):
        a0 = -1.0 + theta * a0
        ath = e_prev + theta * ath
        p[t] = a0
        q[t] = ath
        e_prev = eps[t]
    ppp = 0.0
    ppq = 0.0
    pqq = 0.0
    for t in range(n):
        ppp += p[t] * p[t]
        ppq += p[t] * q[t]
        pqq += q[t] * q[t]
    be = np.empty(n)
    bp = np.empty(n)
    bq = np.empty(n)
    c = np.empty(n)
    be[n - 1] = eps[n - 1]
    bp[n - 1] = p[n - 1]
    bq[n - 1] = q[n - 1]
    c[n - 1] = 1.0
    th2 = theta * theta
    for k in range(n - 2, -1, -1):
        be[k] = eps[k] + theta * be[k + 1]
        bp[k] = p[k] + theta * bp[k + 1]
        bq[k] = q[k] + theta * bq[k + 1]
        c[k] = 1.0 + th2 * c[k + 1]
    L = window_length(theta, n)
    member = np.zeros(n, dtype=np.bool_)
    e_u = 0.0
    e_v = 0.0
    pu = 0.0
    pv = 0.0
    qu = 0.0
    qv = 0.0
    uu = 0.0
    uv = 0.0
    vv = 0.0
    r_out = np.empty(n)
    t_out = np.empty(n)
    m = 0
    i = 0
    while i < n:
        val = xl[order[i]]
        if val > hi:
            break
        j = i
        while j < n and xl[order[j]] == val:
            k = order[j]
            xk = xc[k]
            s0 = 0.0
            s1 = 0.0
            pw = 1.0
            for l in range(k - 1, max(k - L, 0) - 1, -1):
                pw *= theta
                if member[l]:
                    g = pw * c[k]
                    s0 += g
                    s1 += xc[l] * g
            pw = 1.0
            for l in range(k + 1, min(k + L, n - 1) + 1):
                pw *= theta
                if member[l]:
                    g = pw * c[l]
                    s0 += g
                    s1 += xc[l] * g
            ck = c[k]
            uu += 2.0 * s0 + ck
            uv += xk * s0 + s1 + xk * ck
            vv += 2.0 * xk * s1 + xk * xk * ck
            e_u += be[k]
            e_v += xk * be[k]
            pu += bp[k]
            pv += xk * bp[k]
            qu += bq[k]
            qv += xk * bq[k]
            member[k] = True
            j += 1
        if val >= lo:
            r_out[m] = val
            t_out[m] = quad_form(e_u, e_v, uu, uv, vv, pu, qu, pv, qv, ppp, ppq, pqq, sigma2)
            m += 1
        i = j
    return r_out[:m].copy(), t_out[:m].copy()


@njit(cache=True)
def euler_threshold_diffusion(w0, z, dt, c10, c11, c20, c21, tau0):
    steps = z.shape[0]
    w = np.empty(steps + 1)
    w[0] = w0
    sq = math.sqrt(dt)
    for k in range(steps):
        x = w[k]
        if x <= tau0:
            drift = c10 + c11 * x
        else:
            drift = c20 + c21 * x
        w[k + 1] = x + drift * dt + sq * z[k]
    return w


# --- TARMA(1,1) conditional least squares -------------------------------------


@njit(cache=True)
def tarma_profile(y, xl, low, th_lo, th_up):
    """Profile out the four AR coefficients for fixed MA coefficients.

    Residuals are affine in ``phi``: ``e = F(y) - F(Z) phi`` where ``F``
    applies ``v_t + theta_{j(t)} v_{t-1}`` recursively. Returns ``(ssr, phi)``.
    """
    n = y.shape[0]
    fy = 0.0
    fz = np.zeros(4)
    a = np.zeros((4, 4))
    b = np.zeros(4)
    yy = 0.0
    for t in range(n):
        th = th_lo if low[t] else th_up
        fy = y[t] + th * fy
        z0 = 1.0 if low[t] else 0.0
        z1 = xl[t] if low[t] else 0.0
        z2 = 1.0 - z0
        z3 = 0.0 if low[t] else xl[t]
        fz[0] = z0 + th * fz[0]
        fz[1] = z1 + th * fz[1]
        fz[2] = z2 + th * fz[2]
        fz[3] = z3 + th * fz[3]
        for i in range(4):
            b[i] += fz[i] * fy
            for j in range(i + 1):
                a[i, j] += fz[i] * fz[j]
        yy += fy * fy
    for i in range(4):
        for j in range(i):
            a[j, i] = a[i, j]
    # scale to unit diagonal before solving; regimes can sit at very different levels
    d = np.empty(4)
    for i in range(4):
        d[i] = math.sqrt(a[i, i]) if a[i, i] > 0 else 1.0
    for i in range(4):
        b[i] /= d[i]
        for j in range(4):
            a[i, j] /= d[i] * d[j]
    phi = np.linalg.solve(a, b)
    ssr = yy - (phi @ b)
    for i in range(4):
        phi[i] /= d[i]
    return max(ssr, 0.0), phi


@njit(cache=True)
def tarma_residuals(y, xl, low, phi, th_lo, th_up):
    n = y.shape[0]
    e = np.empty(n)
    prev = 0.0
    for t in range(n):
        if low[t]:
            prev = y[t] - phi[0] - phi[1] * xl[t] + th_lo * prev
        else:
            prev = y[t] - phi[2] - phi[3] * xl[t] + th_up * prev
        e[t] = prev
    return e


@njit(cache=True)
def _ssr_at(y, xl, low, th_lo, th_up, common):
    if common:
        th_up = th_lo
    return tarma_profile(y, xl, low, th_lo, th_up)[0]


@njit(cache=True)
def _golden_inner(y, xl, low, th_lo, a, b, tol):
    g = 0.5 * (math.sqrt(5.0) - 1.0)
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc = _ssr_at(y, xl, low, th_lo, c, False)
    fd = _ssr_at(y, xl, low, th_lo, d, False)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = _ssr_at(y, xl, low, th_lo, c, False)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = _ssr_at(y, xl, low, th_lo, d, False)
    if fc <= fd:
        return c, fc
    return d, fd


@njit(cache=True)
def fit_tarma_at(y, xl, low, common, bound, n_grid, tol):
    """Grid over the MA coefficients, then nested golden section in the best cell.

    Returns ``(ssr, th_lo, th_up)``.
    """
    step = 2 * bound / (n_grid - 1)
    best = np.inf
    bl = 0.0
    bu = 0.0
    for i in range(n_grid):
        tl = -bound + i * step
        if common:
            s = _ssr_at(y, xl, low, tl, tl, True)
            if s < best:
                best, bl, bu = s, tl, tl
            continue
        for j in range(n_grid):
            tu = -bound + j * step
            s = _ssr_at(y, xl, low, tl, tu, False)
            if s < best:
                best, bl, bu = s, tl, tu
    g = 0.5 * (math.sqrt(5.0) - 1.0)
    a = max(-bound, bl - step)
    b = min(bound, bl + step)
    lu = max(-bound, bu - step)
    hu = min(bound, bu + step)
    c = b - g * (b - a)
    d = a + g * (b - a)
    if common:
        fc = _ssr_at(y, xl, low, c, c, True)
        fd = _ssr_at(y, xl, low, d, d, True)
        uc = c
        ud = d
    else:
        uc, fc = _golden_inner(y, xl, low, c, lu, hu, tol)
        ud, fd = _golden_inner(y, xl, low, d, lu, hu, tol)
    while b - a > tol:
        if fc <= fd:
            b, d, fd, ud = d, c, fc, uc
            c = b - g * (b - a)
            if common:
                fc = _ssr_at(y, xl, low, c, c, True)
                uc = c
            else:
                uc, fc = _golden_inner(y, xl, low, c, lu, hu, tol)
        else:
            a, c, fc, uc = c, d, fd, ud
            d = a + g * (b - a)
            if common:
                fd = _ssr_at(y, xl, low, d, d, True)
                ud = d
            else:
                ud, fd = _golden_inner(y, xl, low, d, lu, hu, tol)
    if fc <= fd:
        tl, tu, s = c, uc, fc
    else:
        tl, tu, s = d, ud, fd
    if best < s:
        return best, bl, bu
    return s, tl, tu


@njit(cache=True)
def tarma_hessian(y, xl, low, phi, th_lo, th_up, common):
    """Exact Hessian of the residual sum of squares in
    ``(phi10, phi11, phi20, phi21, th_lo[, th_up])``."""
    n = y.shape[0]
    m = 5 if common else 6
    de = np.zeros(m)
    d2 = np.zeros((m, m))
    nde = np.zeros(m)
    nd2 = np.zeros((m, m))
    h = np.zeros((m, m))
    e = 0.0
    for t in range(n):
        lo = low[t]
        th = th_lo if lo else th_up
        k = 4 if (lo or common) else 5
        en = (y[t] - phi[0] - phi[1] * xl[t]) if lo else (y[t] - phi[2] - phi[3] * xl[t])
        en += th * e
        for i in range(m):
            nde[i] = th * de[i]
        if lo:
            nde[0] -= 1.0
            nde[1] -= xl[t]
        else:
            nde[2] -= 1.0
            nde[3] -= xl[t]
        nde[k] += e
        for i in range(m):
            for j in range(m):
                nd2[i, j] = th * d2[i, j]
        for i in range(m):
            nd2[k, i] += de[i]
            nd2[i, k] += de[i]
        for i in range(m):
            de[i] = nde[i]
            for j in range(m):
                d2[i, j] = nd2[i, j]
        e = en
        for i in range(m):
            for j in range(m):
                h[i, j] += 2.0 * (de[i] * de[j] + e * d2[i, j])
    return h
