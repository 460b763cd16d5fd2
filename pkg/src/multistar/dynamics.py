"""Time evolution of the per-star deviation fields.

The second-order system solved per star (indices i summed over k) is

    acc_i = -vel_i - delta e^{-beta tau} W~^{-a} d_k( W~^{1+a} inv^k_i det^{-1/a} )
            + self_i + sum tidal_i

with the pressure factor expanded as

    (1+a)(d_k W~) inv^k_i det^{-1/a} + W~ d_k( inv^k_i det^{-1/a} )

to avoid 0/0 at the vacuum boundary.  An equivalent gradient form replaces
the pressure term by (1+a) delta e^{-beta tau} inv^k_i d_k( W~ det^{-1/a} );
the two agree identically through the Piola identity, and the matrix
zeta-curl annihilates the gradient form, which the curl residual checks.

States advance with the classical four-stage explicit scheme; gravity is
refreshed at every stage (cached by (tau, displacement)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import damping_value, energy_snapshot
from .domain import FieldRep
from .errors import DegenerateMapError, NearContactError, SeparationError
from .gravity import gravity_bundle, tidal_field_total, zeta_gradient_values
from .kinematics import FlowState, deformation_fields, t_of_tau, zero_state
from .profiles import total_mass
from .separation import ssc_min, check_overlap


@dataclass(frozen=True)
class VelocitySpec:
    """Initial velocity of the deviation field: vec + rate * x."""

    vec: np.ndarray
    rate: float = 0.0

    @classmethod
    def zero(cls):
        return cls(vec=np.zeros(3), rate=0.0)

    @classmethod
    def constant(cls, vec):
        return cls(vec=np.asarray(vec, dtype=float), rate=0.0)

    @classmethod
    def radial(cls, rate):
        return cls(vec=np.zeros(3), rate=float(rate))

    def to_fieldrep(self, basis):
        c = np.zeros((3, basis.n))
        c[:, basis._index[(0, 0, 0)]] = self.vec
        for i, e in enumerate([(1, 0, 0), (0, 1, 0), (0, 0, 1)]):
            c[i, basis._index[e]] += self.rate
        return FieldRep(basis, c)


# ----------------------------------------------------------- right-hand sides

def _pressure_divergence_form(system, fields, star):
    """W~^{-a} d_k(W~^{1+a} inv^k_i det^{-1/a}) in expanded boundary-safe form."""
    basis = system.basis
    grid = basis.grid
    prof = system.profiles[star]
    w = prof.enthalpy(grid.nodes)
    dw = prof.enthalpy_gradient(grid.nodes)
    inv = fields.inv[star]
    jf = fields.det[star] ** (-1.0 / system.alpha)
    out = np.empty((grid.n_nodes, 3))
    for i in range(3):
        aj = inv[:, :, i] * jf[:, None]              # inv^k_i det^{-1/a} over k
        first = (1.0 + system.alpha) * np.sum(dw * aj, axis=1)
        coefs = basis.fit(aj.T)
        div = np.zeros(grid.n_nodes)
        for k in range(3):
            div += basis.eval(basis.D[k] @ coefs[k])
        out[:, i] = first + w * div
    return out


def _pressure_gradient_form(system, fields, star):
    """(1+a) inv^k_i d_k( W~ det^{-1/a} ), the zeta-gradient of the enthalpy head."""
    basis = system.basis
    grid = basis.grid
    w = system.profiles[star].enthalpy(grid.nodes)
    jf = fields.det[star] ** (-1.0 / system.alpha)
    coef = basis.fit(w * jf)
    dvals = np.stack([basis.eval(basis.D[k] @ coef) for k in range(3)], axis=1)
    out = (1.0 + system.alpha) * np.einsum("nk,nki->ni", dvals, fields.inv[star])
    return out


def acceleration(system, state, fields=None, gravity=None, form="divergence"):
    """Per-star acceleration values at grid nodes, list of (n_nodes, 3)."""
    if fields is None:
        fields = deformation_fields(state, system.centers, system.mu_specs)
    if gravity is None:
        gravity = gravity_bundle(system, state, fields)
    pref = system.delta * np.exp(-system.beta * state.tau)
    out = []
    for k in range(state.n_stars):
        if form == "divergence":
            press = _pressure_divergence_form(system, fields, k)
        elif form == "gradient":
            press = _pressure_gradient_form(system, fields, k)
        else:
            raise ValueError(f"unknown rhs form {form!r}")
        vel = state.velocity[k].values().T
        out.append(-vel - pref * press + gravity[k])
    return out


def curl_equation_residual(system, state, fields=None, form="gradient"):
    """Max-node Frobenius norm of the zeta-curl of (acc + vel).

    The gradient form is curl-free up to FieldRep projection; the divergence
    form adds quadrature-level consistency error.
    """
    if fields is None:
        fields = deformation_fields(state, system.centers, system.mu_specs)
    accs = acceleration(system, state, fields, form=form)
    worst = 0.0
    basis = system.basis
    for k in range(state.n_stars):
        q = accs[k] + state.velocity[k].values().T
        rep = FieldRep.from_nodes(basis, q.T)
        gz = zeta_gradient_values(basis, rep, fields.inv[k])
        curl = gz - np.transpose(gz, (0, 2, 1))
        worst = max(worst, float(np.max(np.sqrt(np.sum(curl**2, axis=(1, 2))))))
    return worst


def rhs_form_difference(system, state, fields=None):
    """Weighted relative L2 difference between the two pressure forms."""
    if fields is None:
        fields = deformation_fields(state, system.centers, system.mu_specs)
    grid = system.grid
    worst = 0.0
    for k in range(state.n_stars):
        a = _pressure_divergence_form(system, fields, k)
        b = _pressure_gradient_form(system, fields, k)
        wa = system.profiles[k].enthalpy_alpha(grid.nodes)
        num = np.dot(grid.weights * wa, np.sum((a - b) ** 2, axis=1))
        den = np.dot(grid.weights * wa, np.sum(b**2, axis=1))
        worst = max(worst, float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num)))
    return worst


# ----------------------------------------------------------- stepping

@dataclass
class StepReport:
    tau: float
    dtau: float
    jac_min: float
    jac_dev: float
    inv_dev: float
    theta_inf_sum: float
    curl_residual: float
    monitors_ok: bool


def _derivative(system, state, form):
    fields = deformation_fields(state, system.centers, system.mu_specs)
    gravity = gravity_bundle(system, state, fields)
    accs = acceleration(system, state, fields, gravity, form=form)
    basis = system.basis
    d_disp = [f.coeffs for f in state.velocity]
    d_vel = [basis.fit(a.T) for a in accs]
    return d_disp, d_vel


def _shifted(system, state, tau, disp_c, vel_c):
    basis = system.basis
    return FlowState(
        tau=tau,
        displacement=[FieldRep(basis, c) for c in disp_c],
        velocity=[FieldRep(basis, c) for c in vel_c],
    )


def advance(system, state, dtau, form="divergence", identity_checks=True):
    """One classical 4-stage step; returns (new state, StepReport)."""
    if dtau == 0.0:
        rep = _report(system, state, 0.0, identity_checks=False)
        return state.copy(), rep
    tau = state.tau
    d0 = [f.coeffs for f in state.displacement]
    v0 = [f.coeffs for f in state.velocity]

    k1d, k1v = _derivative(system, state, form)
    s2 = _shifted(system, state, tau + dtau / 2,
                  [d0[i] + dtau / 2 * k1d[i] for i in range(len(d0))],
                  [v0[i] + dtau / 2 * k1v[i] for i in range(len(d0))])
    k2d, k2v = _derivative(system, s2, form)
    s3 = _shifted(system, state, tau + dtau / 2,
                  [d0[i] + dtau / 2 * k2d[i] for i in range(len(d0))],
                  [v0[i] + dtau / 2 * k2v[i] for i in range(len(d0))])
    k3d, k3v = _derivative(system, s3, form)
    s4 = _shifted(system, state, tau + dtau,
                  [d0[i] + dtau * k3d[i] for i in range(len(d0))],
                  [v0[i] + dtau * k3v[i] for i in range(len(d0))])
    k4d, k4v = _derivative(system, s4, form)

    new = _shifted(
        system, state, tau + dtau,
        [d0[i] + dtau / 6 * (k1d[i] + 2 * k2d[i] + 2 * k3d[i] + k4d[i]) for i in range(len(d0))],
        [v0[i] + dtau / 6 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]) for i in range(len(d0))],
    )
    return new, _report(system, new, dtau, identity_checks)


def _report(system, state, dtau, identity_checks):
    fields = deformation_fields(state, system.centers, system.mu_specs)
    mon = fields.monitor(system.eps2)
    theta_inf = sum(float(np.max(np.linalg.norm(f.values().T, axis=1)))
                    for f in state.displacement)
    curl = (curl_equation_residual(system, state, fields, form="gradient")
            if identity_checks else float("nan"))
    return StepReport(
        tau=state.tau,
        dtau=dtau,
        jac_min=float(np.min(fields.det)),
        jac_dev=float(np.max(mon["det_dev"])),
        inv_dev=float(np.max(mon["inv_dev"])),
        theta_inf_sum=theta_inf,
        curl_residual=curl,
        monitors_ok=bool(mon["inv_ok"] and mon["det_ok"] and theta_inf <= system.eps2),
    )


# ----------------------------------------------------------- simulation

@dataclass
class SnapshotRecord:
    tau: float
    t: float
    state: FlowState
    energy: object                 # diagnostics.EnergySnapshot
    damping: float
    tidal_norm: float
    min_separation: float
    diameters: np.ndarray
    centroids: np.ndarray          # (N, 3) Eulerian mass centroids
    theta_inf_sum: float
    jac_min: float


@dataclass
class SimulationResult:
    status: str
    snapshots: list
    step_reports: list
    mass_total: float
    masses: np.ndarray
    system: object

    @property
    def taus(self):
        return np.array([s.tau for s in self.snapshots])

    def energy_series(self):
        """Running cumulative energy/curl sups aligned with snapshots."""
        from .diagnostics import curl_energy_sup, energy_sup
        snaps = [s.energy for s in self.snapshots]
        S = [energy_sup(snaps[: i + 1], self.system.alpha) for i in range(len(snaps))]
        C = [curl_energy_sup(snaps[: i + 1]) for i in range(len(snaps))]
        return np.array(S), np.array(C)


def _outer_shell_index(grid):
    return np.flatnonzero(grid.radii == np.max(grid.radii))


def _geometry(system, state, fields):
    """Eulerian diameters, min star separation, centroids at this snapshot."""
    grid = system.grid
    idx = _outer_shell_index(grid)
    scale = np.exp(state.tau)
    N = state.n_stars
    shells = [scale * fields.zeta[k][idx] for k in range(N)]
    diameters = np.empty(N)
    for k in range(N):
        pts = shells[k]
        diameters[k] = np.max(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2))
    min_sep = np.inf
    for i in range(N):
        for j in range(i + 1, N):
            d = np.linalg.norm(shells[i][:, None, :] - shells[j][None, :, :], axis=2)
            min_sep = min(min_sep, float(np.min(d)))
    wa_w = [system.profiles[k].enthalpy_alpha(grid.nodes) * grid.weights for k in range(N)]
    centroids = np.empty((N, 3))
    for k in range(N):
        eta = scale * fields.zeta[k]
        centroids[k] = (wa_w[k] @ eta) / np.sum(wa_w[k])
    return diameters, float(min_sep), centroids


def _tidal_norm(system, state, fields):
    """sqrt of the W~^a-weighted L2 norm of the summed tidal field, over stars."""
    if state.n_stars < 2 or not system.gravity_on:
        return 0.0
    grid = system.grid
    total = 0.0
    for k in range(state.n_stars):
        tid = tidal_field_total(system, state, fields, k)
        wa = system.profiles[k].enthalpy_alpha(grid.nodes)
        total += np.dot(grid.weights * wa, np.sum(tid**2, axis=1))
    return float(np.sqrt(total))


def _snapshot(system, state, b):
    fields = deformation_fields(state, system.centers, system.mu_specs)
    energy = energy_snapshot(system, state, fields, b)
    diameters, min_sep, centroids = _geometry(system, state, fields)
    theta_inf = sum(float(np.max(np.linalg.norm(f.values().T, axis=1)))
                    for f in state.displacement)
    return SnapshotRecord(
        tau=state.tau,
        t=float(t_of_tau(state.tau)),
        state=state.copy(),
        energy=energy,
        damping=damping_value(system, state, b),
        tidal_norm=_tidal_norm(system, state, fields),
        min_separation=min_sep,
        diameters=diameters,
        centroids=centroids,
        theta_inf_sum=theta_inf,
        jac_min=float(np.min(fields.det)),
    )


def simulate(system, tau_end, dtau, snapshot_every=0.1, velocity_specs=None,
             b=None, form="divergence", identity_checks=True, gate=True):
    """Evolve the system over [0, tau_end]; returns a SimulationResult.

    Refuses to run (SeparationError) when the initial configuration fails the
    separation gate or the overlap check.  A degenerate Jacobian or a
    near-contact event terminates the run early with the matching status.
    """
    b = system.order_cap if b is None else b
    if gate and system.n_stars >= 2:
        ok, _ = check_overlap(system.centers)
        rep = ssc_min(system.centers, system.mu_specs, eps2=system.eps2)
        if not ok:
            raise SeparationError("initial star supports overlap or touch")
        if not rep.passed:
            raise SeparationError(
                f"separation gate failed: value {rep.ssc_value:.6f} < required "
                f"{rep.required:.6f}")
    basis = system.basis
    state = zero_state(basis, system.n_stars, tau=0.0)
    if velocity_specs is not None:
        for k, spec in enumerate(velocity_specs):
            state.velocity[k] = spec.to_fieldrep(basis)
    masses = np.array([total_mass(p, system.grid) for p in system.profiles])

    snapshots = [_snapshot(system, state, b)]
    reports = []
    status = "completed"
    n_steps = int(round(tau_end / dtau))
    next_snap = snapshot_every
    try:
        for s in range(n_steps):
            state, rep = advance(system, state, dtau, form=form,
                                 identity_checks=identity_checks)
            reports.append(rep)
            if state.tau >= next_snap - 1e-9 or s == n_steps - 1:
                snapshots.append(_snapshot(system, state, b))
                while next_snap <= state.tau + 1e-9:
                    next_snap += snapshot_every
    except DegenerateMapError:
        status = "degenerate"
    except NearContactError:
        status = "near-contact"
    return SimulationResult(status=status, snapshots=snapshots, step_reports=reports,
                            mass_total=float(np.sum(masses)), masses=masses,
                            system=system)
