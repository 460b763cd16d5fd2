"""Executable identity suite: operator algebra, map calculus, potential checks.

Each check returns its worst residual and threshold; the CLI renders these as
a pass/fail table and the acceptance tests assert them directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    ANGULAR_PAIRS,
    FieldRep,
    angular_derivative,
    decompose_rect_residual,
    mixed_derivative,
    multi_orders,
    radial_derivative,
    rect_derivative,
    rect_partial,
    rectangular_expansion,
)
from .dynamics import VelocitySpec
from .gravity import (
    curl_residual,
    divergence_residual,
    radial_decomposition_residual,
    self_field,
)
from .kinematics import (
    deformation_fields,
    piola_residual,
    spatial_differentiation_residual,
    temporal_differentiation_residual,
    zero_state,
)


@dataclass
class CheckResult:
    name: str
    residual: float
    threshold: float

    @property
    def passed(self):
        return self.residual < self.threshold


def _random_field(basis, rng, max_degree=None):
    c = rng.standard_normal((3, basis.n))
    if max_degree is not None:
        c[:, basis.exps.sum(axis=1) > max_degree] = 0.0
    return FieldRep(basis, c)


def check_commutators(basis, rng, n_fields=50, threshold=1e-8):
    worst = 0.0
    for _ in range(n_fields):
        F = FieldRep(basis, rng.standard_normal(basis.n))
        i, j = ANGULAR_PAIRS[rng.integers(3)]
        a = radial_derivative(angular_derivative(F, i, j)).values()
        b = angular_derivative(radial_derivative(F), i, j).values()
        worst = max(worst, float(np.max(np.abs(a - b))))
        a = angular_derivative(angular_derivative(F, 2, 3), 1, 2).values()
        b = angular_derivative(angular_derivative(F, 1, 2), 2, 3).values()
        c = angular_derivative(F, 1, 3).values()
        worst = max(worst, float(np.max(np.abs(a - b - c))))
        m = int(rng.integers(1, 4))
        a = rect_partial(radial_derivative(F), m).values()
        b = radial_derivative(rect_partial(F, m)).values()
        c = rect_partial(F, m).values()
        worst = max(worst, float(np.max(np.abs(a - b - c))))
        jj, ii = ANGULAR_PAIRS[rng.integers(3)]
        a = rect_partial(angular_derivative(F, jj, ii), m).values()
        b = angular_derivative(rect_partial(F, m), jj, ii).values()
        c = ((m == jj) * rect_partial(F, ii).values()
             - (m == ii) * rect_partial(F, jj).values())
        worst = max(worst, float(np.max(np.abs(a - b - c))))
    return CheckResult("commutator relations", worst, threshold)


def check_decomposition(basis, rng, n_fields=50, threshold=1e-8):
    worst = 0.0
    for _ in range(n_fields):
        F = FieldRep(basis, rng.standard_normal(basis.n))
        i = int(rng.integers(1, 4))
        worst = max(worst, decompose_rect_residual(F, i, 0.25))
    return CheckResult("rectangular-to-spherical decomposition", worst, threshold)


def check_piola(system, rng, n_fields=50, threshold=1e-8):
    basis = system.basis
    worst = 0.0
    deg = basis.exps.sum(axis=1)
    for _ in range(n_fields):
        state = zero_state(basis, 1)
        c = np.zeros((3, basis.n))
        c[:, deg <= 2] = 0.03 * rng.standard_normal((3, int((deg <= 2).sum())))
        state.displacement[0] = FieldRep(basis, c)
        worst = max(worst, piola_residual(state, system.centers[:1], system.mu_specs[:1]))
    return CheckResult("cofactor divergence (Piola)", worst, threshold)


def check_radial_decomposition(basis, rng, n_fields=50, threshold=1e-8):
    worst = 0.0
    for _ in range(n_fields):
        F = _random_field(basis, rng)
        worst = max(worst, radial_decomposition_residual(F))
    return CheckResult("radial-derivative decomposition", worst, threshold)


def check_rectangular_expansion(basis, rng, n_orders=8, threshold=1e-10):
    orders = [mn for mn in multi_orders(3) if 0 < mn[0] + sum(mn[1]) <= 3]
    pick = rng.choice(len(orders), size=min(n_orders, len(orders)), replace=False)
    F = _random_field(basis, rng)
    pts = basis.grid.nodes
    worst = 0.0
    for idx in pick:
        m, n = orders[idx]
        direct = mixed_derivative(F, m, n).values()
        total = np.zeros((3, pts.shape[0]))
        for k, Q in rectangular_expansion(m, n).items():
            total += Q.eval(pts)[None, :] * rect_derivative(F, k).values()
        worst = max(worst, float(np.max(np.abs(direct - total))))
    return CheckResult("smooth-coefficient rectangular expansion", worst, threshold)


def check_differentiation_formulae(system, rng, threshold_spatial=1e-10,
                                   threshold_temporal=1e-5, dtau=1e-3):
    basis = system.basis
    deg = basis.exps.sum(axis=1)
    state = zero_state(basis, 1)
    c = np.zeros((3, basis.n))
    c[:, deg <= 2] = 0.004 * rng.standard_normal((3, int((deg <= 2).sum())))
    state.displacement[0] = FieldRep(basis, c)
    res_a, res_j = spatial_differentiation_residual(state, system.centers[:1],
                                                    system.mu_specs[:1])
    spatial = CheckResult("map differentiation formulae (spatial)",
                          max(res_a, res_j), threshold_spatial)

    ct = np.zeros((3, basis.n))
    ct[:, deg <= 2] = 0.03 * rng.standard_normal((3, int((deg <= 2).sum())))

    def make_state(tau):
        s = zero_state(basis, 1, tau=tau)
        s.displacement[0] = FieldRep(basis, np.sin(tau) * ct)
        s.velocity[0] = FieldRep(basis, np.cos(tau) * ct)
        return s

    r1 = max(temporal_differentiation_residual(make_state, 0.7, dtau,
                                               system.centers[:1], system.mu_specs[:1]))
    r2 = max(temporal_differentiation_residual(make_state, 0.7, 2 * dtau,
                                               system.centers[:1], system.mu_specs[:1]))
    temporal = CheckResult(f"map differentiation formulae (temporal, dtau={dtau:g})",
                           r1, threshold_temporal)
    # second-order convergence: doubling dtau must grow the residual ~4x
    order = CheckResult("temporal residual second-order convergence (ratio/4)",
                        abs(r2 / r1 / 4.0 - 1.0), 0.35)
    return spatial, temporal, order


def check_potential_identities(system, threshold_div=0.05, threshold_curl=1e-6):
    state = zero_state(system.basis, 1)
    fields = deformation_fields(state, system.centers[:1], system.mu_specs[:1])
    G = self_field(system, state, fields, 0, None, scheme="polar")
    div = divergence_residual(system, state, fields, 0, G)
    curl = curl_residual(system, state, fields, 0, G)
    return (CheckResult("self-field divergence identity (static radial)", div, threshold_div),
            CheckResult("self-field curl-free identity (static radial)", curl, threshold_curl))


def run_identity_suite(system, seed=0, n_fields=50):
    """Full identity suite on the system's discretisation; list of CheckResult."""
    rng = np.random.default_rng(seed)
    basis = system.basis
    results = [
        check_commutators(basis, rng, n_fields),
        check_decomposition(basis, rng, n_fields),
        check_piola(system, rng, n_fields),
        check_radial_decomposition(basis, rng, n_fields),
        check_rectangular_expansion(basis, rng),
    ]
    results.extend(check_differentiation_formulae(system, rng))
    results.extend(check_potential_identities(system))
    return results
