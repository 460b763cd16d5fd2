"""Numba kernels for the Newtonian-potential quadratures.

All kernels parallelise over evaluation points only; every per-point source
loop runs in a fixed order, so results are bit-identical for any thread
count.  Polynomial integrand factors are evaluated from monomial exponents
and coefficient arrays (the caller's FieldRep data).
"""

import numpy as np
from numba import njit, prange


@njit(cache=True)
def _poly_eval3(exps, coef, x, y, z, maxdeg):
    """Evaluate a 3-component polynomial at one point."""
    xp = np.empty(maxdeg + 1)
    yp = np.empty(maxdeg + 1)
    zp = np.empty(maxdeg + 1)
    xp[0] = 1.0
    yp[0] = 1.0
    zp[0] = 1.0
    for d in range(1, maxdeg + 1):
        xp[d] = xp[d - 1] * x
        yp[d] = yp[d - 1] * y
        zp[d] = zp[d - 1] * z
    out = np.zeros(3)
    for k in range(exps.shape[0]):
        mono = xp[exps[k, 0]] * yp[exps[k, 1]] * zp[exps[k, 2]]
        out[0] += coef[0, k] * mono
        out[1] += coef[1, k] * mono
        out[2] += coef[2, k] * mono
    return out


@njit(cache=True, parallel=True)
def plain_kernel_sum(eval_zeta, src_zeta, gvals, w):
    """sum_q w_q g(z_q) / |zeta_e - zeta_q|; caller guarantees separation."""
    E = eval_zeta.shape[0]
    Q = src_zeta.shape[0]
    out = np.zeros((E, 3))
    for e in prange(E):
        ax = eval_zeta[e, 0]
        ay = eval_zeta[e, 1]
        az = eval_zeta[e, 2]
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for q in range(Q):
            dx = ax - src_zeta[q, 0]
            dy = ay - src_zeta[q, 1]
            dz = az - src_zeta[q, 2]
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            c = w[q] / d
            s0 += c * gvals[q, 0]
            s1 += c * gvals[q, 1]
            s2 += c * gvals[q, 2]
        out[e, 0] = s0
        out[e, 1] = s1
        out[e, 2] = s2
    return out


@njit(cache=True, parallel=True)
def split_kernel_sum(eval_zeta, src_zeta, gvals, w, h, g_at_eval):
    """Cut-off sum plus local expansion: excludes sources with d <= h and
    adds 2 pi h^2 g(eval), the leading term of the excluded-ball integral."""
    E = eval_zeta.shape[0]
    Q = src_zeta.shape[0]
    out = np.zeros((E, 3))
    corr = 2.0 * np.pi * h * h
    for e in prange(E):
        ax = eval_zeta[e, 0]
        ay = eval_zeta[e, 1]
        az = eval_zeta[e, 2]
        s0 = corr * g_at_eval[e, 0]
        s1 = corr * g_at_eval[e, 1]
        s2 = corr * g_at_eval[e, 2]
        for q in range(Q):
            dx = ax - src_zeta[q, 0]
            dy = ay - src_zeta[q, 1]
            dz = az - src_zeta[q, 2]
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            if d > h:
                c = w[q] / d
                s0 += c * gvals[q, 0]
                s1 += c * gvals[q, 1]
                s2 += c * gvals[q, 2]
        out[e, 0] = s0
        out[e, 1] = s1
        out[e, 2] = s2
    return out


@njit(cache=True, parallel=True)
def polar_kernel_sum(eval_x, eval_zeta, exps, gcoef, maxdeg,
                     zconst, zlin, thcoef, xi, wxi, dirs, wdir):
    """Singularity-removing polar quadrature of int_ball g(z)/|zeta(x)-zeta(z)| dz.

    For each evaluation point x the source ball is swept in rays z = x + rho u.
    The exact ray/unit-sphere entry and exit lengths bound a Gauss rule in rho
    (nodes xi on [0,1]); the rho^2 volume factor cancels the kernel blowup, so
    the integrand rho^2 g / |zeta(x)-zeta(z)| is smooth along every ray.
    zeta(z) = z + zconst + zlin z + theta(z) with theta the polynomial
    displacement (coefficients thcoef).
    """
    E = eval_x.shape[0]
    ND = dirs.shape[0]
    NX = xi.shape[0]
    out = np.zeros((E, 3))
    for e in prange(E):
        px = eval_x[e, 0]
        py = eval_x[e, 1]
        pz = eval_x[e, 2]
        zx = eval_zeta[e, 0]
        zy = eval_zeta[e, 1]
        zz = eval_zeta[e, 2]
        r2 = px * px + py * py + pz * pz
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for a in range(ND):
            ux = dirs[a, 0]
            uy = dirs[a, 1]
            uz = dirs[a, 2]
            b = px * ux + py * uy + pz * uz
            disc = b * b - (r2 - 1.0)
            if disc <= 0.0:
                continue
            sq = np.sqrt(disc)
            lo = -b - sq
            hi = -b + sq
            if hi <= 0.0:
                continue
            if lo < 0.0:
                lo = 0.0
            span = hi - lo
            if span <= 0.0:
                continue
            for m in range(NX):
                rho = lo + span * xi[m]
                if rho <= 0.0:
                    continue
                sx = px + rho * ux
                sy = py + rho * uy
                sz = pz + rho * uz
                g = _poly_eval3(exps, gcoef, sx, sy, sz, maxdeg)
                th = _poly_eval3(exps, thcoef, sx, sy, sz, maxdeg)
                qx = sx + zconst[0] + zlin[0, 0] * sx + zlin[0, 1] * sy + zlin[0, 2] * sz + th[0]
                qy = sy + zconst[1] + zlin[1, 0] * sx + zlin[1, 1] * sy + zlin[1, 2] * sz + th[1]
                qz = sz + zconst[2] + zlin[2, 0] * sx + zlin[2, 1] * sy + zlin[2, 2] * sz + th[2]
                dx = zx - qx
                dy = zy - qy
                dz = zz - qz
                d = np.sqrt(dx * dx + dy * dy + dz * dz)
                if d <= 0.0:
                    continue
                c = wdir[a] * wxi[m] * span * rho * rho / d
                s0 += c * g[0]
                s1 += c * g[1]
                s2 += c * g[2]
        out[e, 0] = s0
        out[e, 1] = s1
        out[e, 2] = s2
    return out


@njit(cache=True, parallel=True)
def tidal_kernel_sum(eval_zeta, src_zeta, wsrc):
    """sum_q wsrc_q (zeta_e - zeta_q) / |zeta_e - zeta_q|^3 and the min distance."""
    E = eval_zeta.shape[0]
    Q = src_zeta.shape[0]
    out = np.zeros((E, 3))
    dmin = np.full(E, 1e300)
    for e in prange(E):
        ax = eval_zeta[e, 0]
        ay = eval_zeta[e, 1]
        az = eval_zeta[e, 2]
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        dm = 1e300
        for q in range(Q):
            dx = ax - src_zeta[q, 0]
            dy = ay - src_zeta[q, 1]
            dz = az - src_zeta[q, 2]
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            if d < dm:
                dm = d
            c = wsrc[q] / (d * d * d)
            s0 += c * dx
            s1 += c * dy
            s2 += c * dz
        out[e, 0] = s0
        out[e, 1] = s1
        out[e, 2] = s2
        dmin[e] = dm
    return out, dmin
