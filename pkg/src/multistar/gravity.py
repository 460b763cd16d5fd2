"""Self-interaction and tidal gravity by quadrature, with identity checks.

Per star the Lagrangian potential gradient splits into a self part and a sum
of tidal parts,

    self_i(x)  = delta^a e^{-tau} int  d_k( inv^k_i W~^a ) / |zeta(x)-zeta(z)|  dz
    tidal_i(x) = delta^a e^{-tau} int  (zeta(x)-zeta'(z))_i W~'^a / |zeta-zeta'|^3 dz

and the assembled gradient is -(self) - sum(tidal).  The self integrand's
derivative factor is differentiated exactly on its FieldRep fit.  Two
quadratures are provided for the singular self integral: a fast cut-off
scheme (source exclusion within h plus the 2 pi h^2 g local-expansion
correction) used inside the time loop, and a singularity-removing polar rule
(exact ray/ball limits, Gauss in the ray parameter) used by identity checks
and oracle comparisons.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .domain import FieldRep, rect_partial, angular_derivative, radial_derivative
from .errors import DomainError, NearContactError
from .kinematics import deformation_fields, flow_positions
from .profiles import total_mass


# ----------------------------------------------------------- integrand

def self_integrand_coeffs(system, fields, star):
    """Coefficients (3, nb) of g_i = d_k( inv^k_i W~^a ), fitted then
    differentiated exactly."""
    basis = system.basis
    wa = system.profiles[star].enthalpy_alpha(basis.grid.nodes)
    inv = fields.inv[star]
    g = np.zeros((3, basis.n))
    for i in range(3):
        prod = inv[:, :, i] * wa[:, None]          # column i of inv, times weight
        coefs = basis.fit(prod.T)                  # (3, nb), one per k
        for k in range(3):
            g[i] += basis.D[k] @ coefs[k]
    return g


# ----------------------------------------------------------- fields

def _star_affine(system, state, star):
    """Constant and linear parts of zeta(z) - z for the polar kernel."""
    e = np.exp(-state.tau)
    mu = system.mu_specs[star]
    zconst = e * system.centers[star] + (1.0 - e) * mu.const
    zlin = (1.0 - e) * mu.gradient()
    return np.ascontiguousarray(zconst), np.ascontiguousarray(zlin)


def self_field(system, state, fields, star, eval_pts=None, scheme="polar"):
    """Self-interaction field at reference points (grid nodes when None).

    scheme: "polar" for the singularity-removing rule, "fast" for the
    cut-off-plus-local-expansion scheme, "plain" for well-separated
    exterior points.
    """
    basis = system.basis
    grid = basis.grid
    gcoef = self_integrand_coeffs(system, fields, star)
    src_zeta = np.ascontiguousarray(fields.zeta[star])
    gvals = np.ascontiguousarray(basis.eval(gcoef).T)
    if eval_pts is None:
        eval_x = grid.nodes
        eval_zeta = src_zeta
    else:
        eval_x = np.atleast_2d(np.asarray(eval_pts, dtype=float))
        eval_zeta = flow_positions(state, star, system.centers, system.mu_specs, eval_x)
    eval_x = np.ascontiguousarray(eval_x)
    eval_zeta = np.ascontiguousarray(eval_zeta)
    pref = system.delta ** system.alpha * np.exp(-state.tau)

    if scheme == "plain":
        out = _kernels.plain_kernel_sum(eval_zeta, src_zeta, gvals, grid.weights)
    elif scheme == "fast":
        g_eval = np.ascontiguousarray(basis.eval(gcoef, eval_x).T)
        inside = (np.sum(eval_x**2, axis=1) <= 1.0).astype(float)
        out = _kernels.split_kernel_sum(eval_zeta, src_zeta, gvals, grid.weights,
                                        system.gravity.fast_h, g_eval * inside[:, None])
    elif scheme == "polar":
        gp = system.gravity
        xi, wxi = np.polynomial.legendre.leggauss(gp.polar_radial)
        xi = 0.5 * (xi + 1.0)
        wxi = 0.5 * wxi
        ct, wt = np.polynomial.legendre.leggauss(gp.polar_theta)
        phi = 2.0 * np.pi * (np.arange(gp.polar_phi) + 0.5) / gp.polar_phi
        st = np.sqrt(1.0 - ct**2)
        dirs = np.stack([
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.outer(ct, np.ones(gp.polar_phi)).ravel(),
        ], axis=1)
        wdir = (2.0 * np.pi / gp.polar_phi) * np.repeat(wt, gp.polar_phi)
        zconst, zlin = _star_affine(system, state, star)
        thcoef = np.ascontiguousarray(state.displacement[star].coeffs)
        out = _kernels.polar_kernel_sum(
            eval_x, eval_zeta, basis.exps, np.ascontiguousarray(gcoef),
            int(basis.exps.max()), zconst, zlin, thcoef,
            xi, wxi, np.ascontiguousarray(dirs), wdir)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return pref * out


def tidal_field(system, state, fields, target, source, eval_pts=None):
    """Tidal field exerted on star `target` by star `source` at reference points."""
    if target == source:
        raise DomainError("tidal field needs two distinct stars")
    basis = system.basis
    grid = basis.grid
    if eval_pts is None:
        eval_zeta = fields.zeta[target]
    else:
        eval_x = np.atleast_2d(np.asarray(eval_pts, dtype=float))
        eval_zeta = flow_positions(state, target, system.centers, system.mu_specs, eval_x)
    wa = system.profiles[source].enthalpy_alpha(grid.nodes)
    out, dmin = _kernels.tidal_kernel_sum(
        np.ascontiguousarray(eval_zeta),
        np.ascontiguousarray(fields.zeta[source]),
        np.ascontiguousarray(grid.weights * wa))
    if float(np.min(dmin)) < system.gravity.d_safe:
        raise NearContactError(
            f"tidal denominator {np.min(dmin):.3f} below safety margin "
            f"{system.gravity.d_safe}: stars {target} and {source} too close")
    pref = system.delta ** system.alpha * np.exp(-state.tau)
    return pref * out


def tidal_field_total(system, state, fields, target, eval_pts=None):
    """Sum of tidal fields from every other star (zero array when N = 1)."""
    n_pts = system.grid.n_nodes if eval_pts is None else np.atleast_2d(eval_pts).shape[0]
    out = np.zeros((n_pts, 3))
    for source in range(system.n_stars):
        if source != target:
            out += tidal_field(system, state, fields, target, source, eval_pts)
    return out


def potential_gradient(system, state, fields, star, eval_pts=None, scheme="polar"):
    """Assembled inv^k_i d_k psi = -(self) - sum(tidal)."""
    return -(self_field(system, state, fields, star, eval_pts, scheme)
             + tidal_field_total(system, state, fields, star, eval_pts))


def gravity_bundle(system, state, fields, scheme="fast"):
    """(self + tidal sum) at all grid nodes for every star, cached.

    This is the term entering the momentum equation with a plus sign.
    Cached per (tau, displacement coefficients) because the O(n^2) sums
    dominate step cost; reused by dynamics stages and diagnostics.
    """
    if not system.gravity_on:
        return np.zeros((system.n_stars, system.grid.n_nodes, 3))
    key = (round(float(state.tau), 14), scheme,
           hash(b"".join(f.coeffs.tobytes() for f in state.displacement)))
    cache = system._gravity_cache
    if key in cache:
        return cache[key]
    out = np.empty((system.n_stars, system.grid.n_nodes, 3))
    for k in range(system.n_stars):
        out[k] = (self_field(system, state, fields, k, None, scheme)
                  + tidal_field_total(system, state, fields, k, None))
    if len(cache) > 8:
        cache.clear()
    cache[key] = out
    return out


# ----------------------------------------------------------- identities

def zeta_gradient_values(basis, rep, inv):
    """[inv^k_j d_k F^i] at nodes for a vector FieldRep: (n, 3, 3), [i, j]."""
    dvals = np.empty((basis.grid.n_nodes, 3, 3))
    for j in range(3):
        dvals[:, :, j] = rect_partial(rep, j + 1).values().T    # d_j F^i
    return np.einsum("nis,nsj->nij", dvals, inv)


def divergence_residual(system, state, fields, star, self_vals=None, scheme="polar"):
    """Weighted relative L2 residual of the self-field divergence identity.

    The zeta-divergence of the self field equals -4 pi delta^a e^{-tau}
    W~^a / det, the pulled-back Poisson equation for the star's own
    potential (the sign and the e^{-tau} factor follow from the kernel
    normalisation of the self field; see notes in the repo docs).
    """
    basis = system.basis
    grid = basis.grid
    if self_vals is None:
        self_vals = self_field(system, state, fields, star, None, scheme)
    rep = FieldRep.from_nodes(basis, self_vals.T)
    gz = zeta_gradient_values(basis, rep, fields.inv[star])
    ndiv = np.trace(gz, axis1=1, axis2=2)
    wa = system.profiles[star].enthalpy_alpha(grid.nodes)
    target = (-4.0 * np.pi * system.delta ** system.alpha * np.exp(-state.tau)
              * wa / fields.det[star])
    w = grid.weights * wa
    num = np.dot(w, (ndiv - target) ** 2)
    den = np.dot(w, target ** 2)
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))


def curl_residual(system, state, fields, star, self_vals=None, scheme="polar"):
    """Max-node Frobenius norm of the zeta-curl of the self field."""
    basis = system.basis
    if self_vals is None:
        self_vals = self_field(system, state, fields, star, None, scheme)
    rep = FieldRep.from_nodes(basis, self_vals.T)
    gz = zeta_gradient_values(basis, rep, fields.inv[star])
    curl = gz - np.transpose(gz, (0, 2, 1))
    return float(np.max(np.sqrt(np.sum(curl**2, axis=(1, 2)))))


def radial_decomposition_residual(rep):
    """Max-node residual of rad F^i = x_i div F - x_k [Curl F]^k_i - ang_ik F^k.

    A vector-calculus identity valid for any differentiable field, with
    [Curl F]^k_i = d_i F^k - d_k F^i; exact on polynomial fields because the
    multiplications by x stay within basis range for differentiated inputs.
    """
    basis = rep.basis
    lhs = radial_derivative(rep).values()          # (3, n)
    div_coef = np.zeros(basis.n)
    for k in range(3):
        div_coef += basis.D[k] @ rep.coeffs[k]
    rhs = np.empty_like(lhs)
    for i in range(3):
        acc = basis.MUL[i] @ div_coef
        for k in range(3):
            curl_ki = basis.D[i] @ rep.coeffs[k] - basis.D[k] @ rep.coeffs[i]
            acc -= basis.MUL[k] @ curl_ki
            if k != i:
                acc -= (basis.ANG[(i + 1, k + 1)] if (i + 1, k + 1) in basis.ANG
                        else -basis.ANG[(k + 1, i + 1)]) @ rep.coeffs[k]
        rhs[i] = basis.eval(acc)
    return float(np.max(np.abs(lhs - rhs)))


# ----------------------------------------------------------- oracles

def parabolic_interior_magnitude(profile, r):
    """|field| of the parabolic star at interior radius r: enclosed mass / r^2."""
    r = np.asarray(r, dtype=float)
    encl = 4.0 * np.pi * (r**3 / 3.0 - 2.0 * r**5 / 5.0 + r**7 / 7.0)
    return profile.delta ** profile.alpha * encl / r**2


def point_mass_field(profile, grid, R):
    """Shell-theorem oracle: field magnitude m / R^2 at exterior distance R.

    Interior requests are rejected; the parabolic interior has its own
    closed form (parabolic_interior_magnitude).
    """
    if R < 1.0:
        raise DomainError("point-mass oracle is exterior-only (R >= 1)")
    return total_mass(profile, grid) / R**2
