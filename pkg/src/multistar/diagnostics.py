"""Weighted energy norms and the run-level energy functionals.

The X-norm of order b weights composite radial/angular derivatives by
chi W~^(a+m) near the boundary and rectangular derivatives by chibar W~^a in
the interior.  The Y-seminorms apply a map-aware first-order operator
(zeta-gradient, zeta-divergence, or matrix zeta-curl) under the weight
W~^(1+a+m) det^(-1/a).  The run energy is the running supremum of

    (1/delta) e^{beta tau} |vel|_X^2 + |disp|_X^2 + |disp|_{Y,grad}^2
        + (1/alpha) |disp|_{Y,div}^2

per star, and the curl energy tracks the zeta-curl seminorms of both fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import FieldRep, mixed_operator_matrix, multi_orders, rect_operator_matrix, rect_orders
from .errors import ConfigurationError, DomainError
from .gravity import zeta_gradient_values


def _check_order(system, b):
    if b > system.order_cap:
        raise ConfigurationError(f"norm order {b} above diagnostic cap {system.order_cap}")


def x_norm_sq(system, rep, b, star):
    """Squared X-norm of order b for a scalar or vector FieldRep."""
    _check_order(system, b)
    basis = system.basis
    grid = basis.grid
    wa = system.profiles[star].enthalpy(grid.nodes)
    wa = np.clip(wa, 0.0, None)
    w_alpha = wa ** system.alpha
    total = 0.0
    for m, n in multi_orders(b):
        M = mixed_operator_matrix(basis, m, n)
        vals = basis.eval((M @ rep.coeffs.T).T if rep.is_vector else M @ rep.coeffs)
        sq = np.sum(vals**2, axis=0) if rep.is_vector else vals**2
        total += np.dot(grid.weights * grid.chi_values * w_alpha * wa**m, sq)
    for k in rect_orders(b):
        M = rect_operator_matrix(basis, k)
        vals = basis.eval((M @ rep.coeffs.T).T if rep.is_vector else M @ rep.coeffs)
        sq = np.sum(vals**2, axis=0) if rep.is_vector else vals**2
        total += np.dot(grid.weights * grid.chibar_values * w_alpha, sq)
    return float(total)


Y_OPERATORS = ("grad", "div", "curl")


def y_seminorm_sq(system, rep, b, star, fields, operator):
    """Squared Y-seminorm of order b under the chosen zeta-operator."""
    _check_order(system, b)
    if operator not in Y_OPERATORS:
        raise DomainError(f"operator must be one of {Y_OPERATORS}")
    if not rep.is_vector:
        raise DomainError("Y-seminorms act on vector fields")
    basis = system.basis
    grid = basis.grid
    inv = fields.inv[star]
    det = fields.det[star]
    wa = np.clip(system.profiles[star].enthalpy(grid.nodes), 0.0, None)
    jfac = det ** (-1.0 / system.alpha)
    total = 0.0

    def op_sq(coeffs):
        gz = zeta_gradient_values(basis, FieldRep(basis, coeffs), inv)
        if operator == "grad":
            return np.sum(gz**2, axis=(1, 2))
        if operator == "div":
            return np.trace(gz, axis1=1, axis2=2) ** 2
        curl = gz - np.transpose(gz, (0, 2, 1))
        return np.sum(curl**2, axis=(1, 2))

    w_alpha1 = wa ** (1.0 + system.alpha)
    for m, n in multi_orders(b):
        M = mixed_operator_matrix(basis, m, n)
        sq = op_sq((M @ rep.coeffs.T).T)
        total += np.dot(grid.weights * grid.chi_values * w_alpha1 * wa**m * jfac, sq)
    for k in rect_orders(b):
        M = rect_operator_matrix(basis, k)
        sq = op_sq((M @ rep.coeffs.T).T)
        total += np.dot(grid.weights * grid.chibar_values * w_alpha1 * jfac, sq)
    return float(total)


# ----------------------------------------------------------- energy snapshots

@dataclass
class EnergySnapshot:
    """Instantaneous per-star energy components at one tau."""

    tau: float
    weighted_velocity: np.ndarray   # (1/delta) e^{beta tau} |vel|_X^2 per star
    displacement_x: np.ndarray
    displacement_ygrad: np.ndarray
    displacement_ydiv: np.ndarray
    curl_velocity: np.ndarray
    curl_displacement: np.ndarray

    def energy_per_star(self, alpha):
        return (self.weighted_velocity + self.displacement_x
                + self.displacement_ygrad + self.displacement_ydiv / alpha)

    def curl_per_star(self):
        return self.curl_velocity + self.curl_displacement


def energy_snapshot(system, state, fields, b):
    """Measure all instantaneous components entering the energy functions."""
    N = state.n_stars
    out = EnergySnapshot(
        tau=state.tau,
        weighted_velocity=np.zeros(N),
        displacement_x=np.zeros(N),
        displacement_ygrad=np.zeros(N),
        displacement_ydiv=np.zeros(N),
        curl_velocity=np.zeros(N),
        curl_displacement=np.zeros(N),
    )
    scale = np.exp(system.beta * state.tau) / system.delta
    for k in range(N):
        out.weighted_velocity[k] = scale * x_norm_sq(system, state.velocity[k], b, k)
        out.displacement_x[k] = x_norm_sq(system, state.displacement[k], b, k)
        out.displacement_ygrad[k] = y_seminorm_sq(system, state.displacement[k], b, k, fields, "grad")
        out.displacement_ydiv[k] = y_seminorm_sq(system, state.displacement[k], b, k, fields, "div")
        out.curl_velocity[k] = y_seminorm_sq(system, state.velocity[k], b, k, fields, "curl")
        out.curl_displacement[k] = y_seminorm_sq(system, state.displacement[k], b, k, fields, "curl")
    return out


def energy_sup(snapshots, alpha, tau=None):
    """Cumulative energy: running sup over snapshots up to tau, summed over stars."""
    vals = [s.energy_per_star(alpha).sum() for s in snapshots
            if tau is None or s.tau <= tau + 1e-12]
    return max(vals) if vals else 0.0


def curl_energy_sup(snapshots, tau=None):
    vals = [s.curl_per_star().sum() for s in snapshots
            if tau is None or s.tau <= tau + 1e-12]
    return max(vals) if vals else 0.0


def truncated_energy_sup(snapshots, alpha, tau1, tau2):
    """Sup of the instantaneous energy over snapshots with tau1 <= tau <= tau2."""
    if tau2 < tau1:
        raise DomainError("truncated energy needs tau1 <= tau2")
    vals = [s.energy_per_star(alpha).sum() for s in snapshots
            if tau1 - 1e-12 <= s.tau <= tau2 + 1e-12]
    return max(vals) if vals else 0.0


def damping_value(system, state, b=None):
    """Damping functional (2 - beta) sum_k (1/delta) e^{beta tau} |vel_k|_X^2."""
    b = system.order_cap if b is None else b
    scale = np.exp(system.beta * state.tau) / system.delta
    total = sum(x_norm_sq(system, state.velocity[k], b, k) for k in range(state.n_stars))
    return float((2.0 - system.beta) * scale * total)


def fit_log_decay(taus, values):
    """OLS slope/intercept of log(values) against tau; needs 5+ positive samples."""
    taus = np.asarray(taus, dtype=float)
    values = np.asarray(values, dtype=float)
    if taus.size < 5:
        raise DomainError("decay fit needs at least 5 samples")
    if np.any(values <= 0):
        raise DomainError("decay fit needs positive values")
    A = np.stack([taus, np.ones_like(taus)], axis=1)
    sol, *_ = np.linalg.lstsq(A, np.log(values), rcond=None)
    return float(sol[0]), float(sol[1])
