"""Rescaled flow maps and their deformation fields.

Per star the rescaled particle position is

    zeta(tau, x) = x + e^{-tau} center + (1 - e^{-tau}) mu(x) + disp(tau, x)

with disp the evolved deviation field (a polynomial FieldRep).  The physical
position is eta = e^tau zeta on the log timescale tau = log(1 + t).  From the
map we form grad zeta, its inverse, and its determinant, which weight every
operator and norm downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import FieldRep, rect_partial
from .errors import DegenerateMapError

JAC_FLOOR = 1e-6


def tau_of_t(t):
    return np.log1p(t)


def t_of_tau(tau):
    return np.expm1(tau)


@dataclass(frozen=True)
class MuSpec:
    """Repulsive velocity field mu(x) = const + lin @ x (lin optional)."""

    const: np.ndarray
    lin: np.ndarray | None = None

    @classmethod
    def constant(cls, vec):
        return cls(const=np.asarray(vec, dtype=float), lin=None)

    @classmethod
    def affine(cls, vec, matrix):
        return cls(const=np.asarray(vec, dtype=float),
                   lin=np.asarray(matrix, dtype=float))

    @property
    def is_constant(self):
        return self.lin is None or not np.any(self.lin)

    def eval(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.broadcast_to(self.const, pts.shape).copy()
        if self.lin is not None:
            out += pts @ self.lin.T
        return out

    def gradient(self):
        """Constant gradient matrix (3, 3)."""
        return np.zeros((3, 3)) if self.lin is None else self.lin


@dataclass
class FlowState:
    """Evolved per-star fields at rescaled time tau.

    displacement[k] and velocity[k] are 3-vector FieldReps (coeff shape (3, n)).
    """

    tau: float
    displacement: list
    velocity: list

    @property
    def n_stars(self):
        return len(self.displacement)

    def copy(self):
        return FlowState(
            tau=self.tau,
            displacement=[FieldRep(f.basis, f.coeffs.copy()) for f in self.displacement],
            velocity=[FieldRep(f.basis, f.coeffs.copy()) for f in self.velocity],
        )


def zero_state(basis, n_stars, tau=0.0):
    z = lambda: FieldRep(basis, np.zeros((3, basis.n)))
    return FlowState(tau=tau, displacement=[z() for _ in range(n_stars)],
                     velocity=[z() for _ in range(n_stars)])


def flow_positions(state, star, centers, mu_specs, pts=None):
    """zeta values for one star at grid nodes or arbitrary points, shape (n, 3)."""
    basis = state.displacement[star].basis
    x = basis.grid.nodes if pts is None else np.atleast_2d(np.asarray(pts, dtype=float))
    e = np.exp(-state.tau)
    out = x + e * np.asarray(centers[star], dtype=float)
    out = out + (1.0 - e) * mu_specs[star].eval(x)
    out = out + state.displacement[star].values(None if pts is None else x).T
    return out


@dataclass
class KinematicFields:
    """Per-star deformation data sampled on the grid.

    grad:   (N, n_nodes, 3, 3)   grad zeta
    inv:    (N, n_nodes, 3, 3)   (grad zeta)^{-1}
    det:    (N, n_nodes)         det grad zeta
    zeta:   (N, n_nodes, 3)      map values
    """

    grad: np.ndarray
    inv: np.ndarray
    det: np.ndarray
    zeta: np.ndarray

    @property
    def n_stars(self):
        return self.grad.shape[0]

    def monitor(self, eps2):
        """A priori monitor values: sup|inv - I|, sup|det - 1| per star."""
        eye = np.eye(3)
        dev_a = np.max(np.abs(self.inv - eye), axis=(1, 2, 3))
        dev_j = np.max(np.abs(self.det - 1.0), axis=1)
        return {
            "inv_dev": dev_a,
            "det_dev": dev_j,
            "inv_ok": bool(np.all(dev_a <= eps2)),
            "det_ok": bool(np.all(dev_j <= eps2)),
        }


def displacement_gradient(disp):
    """grad of a vector FieldRep at grid nodes, shape (n_nodes, 3, 3): [i, j] = d_j F^i."""
    basis = disp.basis
    out = np.empty((basis.grid.n_nodes, 3, 3))
    for j in range(3):
        vals = rect_partial(disp, j + 1).values()
        out[:, :, j] = vals.T
    return out


def deformation_fields(state, centers, mu_specs, jac_floor=JAC_FLOOR):
    """Assemble grad zeta, its inverse and determinant for every star.

    Raises DegenerateMapError when any determinant drops to jac_floor,
    signalling loss of invertibility of the flow map.
    """
    basis = state.displacement[0].basis
    n = basis.grid.n_nodes
    N = state.n_stars
    grad = np.empty((N, n, 3, 3))
    det = np.empty((N, n))
    zeta = np.empty((N, n, 3))
    e = np.exp(-state.tau)
    eye = np.eye(3)
    for k in range(N):
        g = displacement_gradient(state.displacement[k])
        g += eye + (1.0 - e) * mu_specs[k].gradient()
        grad[k] = g
        det[k] = np.linalg.det(g)
        zeta[k] = flow_positions(state, k, centers, mu_specs)
    if np.min(det) <= jac_floor:
        raise DegenerateMapError(
            f"jacobian determinant reached {np.min(det):.3e} (floor {jac_floor:g})")
    inv = np.linalg.inv(grad)
    return KinematicFields(grad=grad, inv=inv, det=det, zeta=zeta)


def eulerian_density(state, fields, profile, star, pts_idx=None):
    """Physical positions and densities for one star.

    Returns (eta, rho) with eta = e^tau zeta and
    rho = delta^alpha W~^alpha e^{-3 tau} / det.
    pts_idx optionally restricts to a subset of grid nodes.
    """
    basis = state.displacement[star].basis
    idx = slice(None) if pts_idx is None else pts_idx
    zeta = fields.zeta[star][idx]
    det = fields.det[star][idx]
    x = basis.grid.nodes[idx]
    eta = np.exp(state.tau) * zeta
    rho = (profile.delta ** profile.alpha * profile.enthalpy_alpha(x)
           * np.exp(-3.0 * state.tau) / det)
    return eta, rho


# ----------------------------------------------------------- identity checks

def _fit_matrix_field(basis, vals):
    """Fit an (n_nodes, 3, 3) node field into 9 FieldReps (as coeff array (3,3,nb))."""
    flat = vals.reshape(vals.shape[0], 9).T
    coefs = basis.fit(flat)
    return coefs.reshape(3, 3, basis.n)


def spatial_differentiation_residual(state, centers, mu_specs):
    """Residuals of the spatial differentiation formulae for inv and det.

    d inv = -inv (d grad_zeta) inv   and   d det = det * inv^s_j d(grad zeta)^j_s,
    with d a rectangular derivative.  The left sides are differentiated on
    FieldRep fits of inv and det; the right sides use the exact second
    derivatives of the polynomial map.  Returns (residual_inv, residual_det).
    """
    basis = state.displacement[0].basis
    fields = deformation_fields(state, centers, mu_specs)
    res_a = 0.0
    res_j = 0.0
    for k in range(state.n_stars):
        inv = fields.inv[k]
        det = fields.det[k]
        inv_coef = _fit_matrix_field(basis, inv)
        det_rep = FieldRep(basis, basis.fit(det))
        for ax in range(3):
            # exact d_ax of grad zeta: second derivatives of the displacement
            dgrad = np.empty_like(inv)
            for j in range(3):
                second = rect_partial(rect_partial(state.displacement[k], j + 1), ax + 1)
                dgrad[:, :, j] = second.values().T
            lhs_a = np.empty_like(inv)
            for i in range(3):
                for j in range(3):
                    lhs_a[:, i, j] = basis.eval(basis.D[ax] @ inv_coef[i, j])
            rhs_a = -np.einsum("nis,nsj,njk->nik", inv, dgrad, inv)
            res_a = max(res_a, float(np.max(np.abs(lhs_a - rhs_a))))
            lhs_j = rect_partial(det_rep, ax + 1).values()
            rhs_j = det * np.einsum("nsj,njs->n", inv, dgrad)
            res_j = max(res_j, float(np.max(np.abs(lhs_j - rhs_j))))
    return res_a, res_j


def temporal_differentiation_residual(make_state, tau, dtau, centers, mu_specs):
    """Residuals of the tau-differentiation formulae by central differences.

    make_state(tau) must return the FlowState of a smooth synthetic
    trajectory; the analytic tau-derivative of grad zeta is taken from the
    trajectory's velocity field plus the mu relaxation term.
    """
    sp = make_state(tau + dtau)
    sm = make_state(tau - dtau)
    s0 = make_state(tau)
    fp = deformation_fields(sp, centers, mu_specs)
    fm = deformation_fields(sm, centers, mu_specs)
    f0 = deformation_fields(s0, centers, mu_specs)
    res_a = 0.0
    res_j = 0.0
    e = np.exp(-tau)
    for k in range(s0.n_stars):
        dgrad = displacement_gradient(s0.velocity[k]) + e * mu_specs[k].gradient()
        lhs_a = (fp.inv[k] - fm.inv[k]) / (2.0 * dtau)
        rhs_a = -np.einsum("nis,nsj,njk->nik", f0.inv[k], dgrad, f0.inv[k])
        res_a = max(res_a, float(np.max(np.abs(lhs_a - rhs_a))))
        lhs_j = (fp.det[k] - fm.det[k]) / (2.0 * dtau)
        rhs_j = f0.det[k] * np.einsum("nsj,njs->n", f0.inv[k], dgrad)
        res_j = max(res_j, float(np.max(np.abs(lhs_j - rhs_j))))
    return res_a, res_j


def piola_residual(state, centers, mu_specs):
    """Max-node divergence of the cofactor matrix det * inv.

    The cofactor field is fitted to FieldReps and differentiated exactly;
    for polynomial maps within basis range the residual is projection error.
    """
    basis = state.displacement[0].basis
    fields = deformation_fields(state, centers, mu_specs)
    worst = 0.0
    for k in range(state.n_stars):
        cof = fields.det[k][:, None, None] * fields.inv[k]
        coef = _fit_matrix_field(basis, cof)
        for i in range(3):
            acc = np.zeros(basis.grid.n_nodes)
            for j in range(3):
                acc += basis.eval(basis.D[j] @ coef[j, i])
            worst = max(worst, float(np.max(np.abs(acc))))
    return worst


def mass_consistency(state, fields, profile, star, grid):
    """Quadrature of rho(eta) e^{3 tau} det over the ball; equals the mass."""
    _, rho = eulerian_density(state, fields, profile, star)
    return float(np.dot(grid.weights, rho * np.exp(3.0 * state.tau) * fields.det[star]))
