"""Weighted norms against analytic and Monte-Carlo oracles; energy functionals."""

import numpy as np
import pytest

from multistar.diagnostics import (
    damping_value,
    energy_snapshot,
    energy_sup,
    curl_energy_sup,
    fit_log_decay,
    truncated_energy_sup,
    x_norm_sq,
    y_seminorm_sq,
)
from multistar.domain import FieldRep, chi as chi_fn
from multistar.errors import ConfigurationError, DomainError
from multistar.kinematics import deformation_fields, zero_state
from multistar.system import make_system

PARABOLIC_MASS_UNIT = 32.0 * np.pi / 105.0


@pytest.fixture(scope="module")
def sys1():
    return make_system([[2.0, 0.0, 0.0]], delta=1e-3, radial_shells=12)


@pytest.fixture(scope="module")
def static(sys1):
    state = zero_state(sys1.basis, 1)
    fields = deformation_fields(state, sys1.centers, sys1.mu_specs)
    return state, fields


def const_field(basis, vec):
    c = np.zeros((3, basis.n))
    c[:, basis._index[(0, 0, 0)]] = vec
    return FieldRep(basis, c)


def identity_field(basis, scale=1.0):
    c = np.zeros((3, basis.n))
    for i, e in enumerate([(1, 0, 0), (0, 1, 0), (0, 0, 1)]):
        c[i, basis._index[e]] = scale
    return FieldRep(basis, c)


class TestXNorm:
    def test_zero_field(self, sys1):
        F = const_field(sys1.basis, [0.0, 0.0, 0.0])
        assert x_norm_sq(sys1, F, 2, 0) == 0.0

    def test_constant_field_order_zero(self, sys1):
        # chi + chibar recombine: |c|^2 * int (1-r^2)^2 = |c|^2 * 32 pi/105
        F = const_field(sys1.basis, [2.0, 0.0, 1.0])
        val = x_norm_sq(sys1, F, 0, 0)
        assert val == pytest.approx(5.0 * PARABOLIC_MASS_UNIT, rel=1e-9)

    def test_order_one_against_monte_carlo(self, sys1):
        # independent dense-sampling quadrature of the closed-form integrand
        # for F = x: chi (3 r^2 W^2 + r^2 W^3) + chibar W^2 (r^2 + 3)
        rng = np.random.default_rng(101)
        n = 4_000_000
        pts = rng.uniform(-1.0, 1.0, size=(n, 3))
        pts = pts[np.sum(pts**2, axis=1) <= 1.0]
        r2 = np.sum(pts**2, axis=1)
        r = np.sqrt(r2)
        W = 1.0 - r2
        c = chi_fn(r)
        integrand = c * (3.0 * r2 * W**2 + r2 * W**3) + (1.0 - c) * W**2 * (r2 + 3.0)
        mc = np.mean(integrand) * (4.0 * np.pi / 3.0)
        F = identity_field(sys1.basis)
        val = x_norm_sq(sys1, F, 1, 0)
        assert val == pytest.approx(mc, rel=5e-3)

    def test_order_above_cap(self, sys1):
        F = identity_field(sys1.basis)
        with pytest.raises(ConfigurationError):
            x_norm_sq(sys1, F, sys1.order_cap + 1, 0)


class TestYSeminorm:
    def test_zero_field(self, sys1, static):
        state, fields = static
        F = const_field(sys1.basis, [0.0, 0.0, 0.0])
        for op in ("grad", "div", "curl"):
            assert y_seminorm_sq(sys1, F, 0, 0, fields, op) == 0.0

    def test_divergence_of_identity_field(self, sys1, static):
        # div_zeta x = 3 at the identity map; 9 * int (1-r^2)^3 dV = 9*64 pi/315
        state, fields = static
        F = identity_field(sys1.basis)
        val = y_seminorm_sq(sys1, F, 0, 0, fields, "div")
        assert val == pytest.approx(9.0 * 64.0 * np.pi / 315.0, rel=1e-9)

    def test_curl_of_gradient_vanishes(self, sys1, static):
        state, fields = static
        basis = sys1.basis
        rng = np.random.default_rng(7)
        g = FieldRep(basis, rng.standard_normal(basis.n))
        grad = np.stack([basis.D[k] @ g.coeffs for k in range(3)])
        F = FieldRep(basis, grad)
        assert y_seminorm_sq(sys1, F, 0, 0, fields, "curl") < 1e-10

    def test_unknown_operator(self, sys1, static):
        state, fields = static
        F = identity_field(sys1.basis)
        with pytest.raises(DomainError):
            y_seminorm_sq(sys1, F, 0, 0, fields, "laplace")


def synthetic_snapshots(sys1, taus, vel_profile):
    """Snapshots of a trajectory with zero displacement and given velocity law."""
    out = []
    basis = sys1.basis
    for tau in taus:
        state = zero_state(basis, 1, tau=tau)
        state.velocity[0] = identity_field(basis, scale=vel_profile(tau))
        fields = deformation_fields(state, sys1.centers, sys1.mu_specs)
        out.append(energy_snapshot(sys1, state, fields, b=2))
    return out


class TestEnergyFunctions:
    def test_zero_trajectory(self, sys1):
        snaps = synthetic_snapshots(sys1, [0.0, 0.5, 1.0], lambda tau: 0.0)
        assert energy_sup(snaps, sys1.alpha) == 0.0
        assert curl_energy_sup(snaps) == 0.0

    def test_single_snapshot_is_instantaneous(self, sys1):
        snaps = synthetic_snapshots(sys1, [0.7], lambda tau: 0.2)
        inst = snaps[0].energy_per_star(sys1.alpha).sum()
        assert energy_sup(snaps, sys1.alpha) == pytest.approx(inst)

    def test_peak_location_of_decaying_velocity(self, sys1):
        # vel = v0 (e^-tau - e^-2tau): the weighted term e^{1.5 tau} |vel|^2
        # peaks at tau = log 5; the running sup is constant afterwards
        taus = np.arange(0.0, 3.01, 0.05)
        snaps = synthetic_snapshots(sys1, taus, lambda t: np.exp(-t) - np.exp(-2 * t))
        vals = [s.energy_per_star(sys1.alpha).sum() for s in snaps]
        peak_tau = taus[int(np.argmax(vals))]
        assert abs(peak_tau - np.log(5.0)) <= 0.05 + 1e-12
        sups = [energy_sup(snaps, sys1.alpha, tau=t) for t in taus]
        k = int(np.argmax(vals))
        assert np.allclose(sups[k:], sups[k])

    def test_running_sup_nondecreasing(self, sys1):
        taus = np.arange(0.0, 2.01, 0.25)
        snaps = synthetic_snapshots(sys1, taus, lambda t: np.exp(-t) - np.exp(-2 * t))
        sups = [energy_sup(snaps, sys1.alpha, tau=t) for t in taus]
        assert np.all(np.diff(sups) >= -1e-15)


@pytest.fixture(scope="module")
def snaps(sys1):
    taus = np.arange(0.0, 2.01, 0.25)
    return taus, synthetic_snapshots(sys1, taus, lambda t: np.exp(-t) - np.exp(-2 * t))


class TestTruncatedEnergy:

    def test_zero_start_equals_full(self, sys1, snaps):
        taus, snapshots = snaps
        for t in taus:
            assert truncated_energy_sup(snapshots, sys1.alpha, 0.0, t) == \
                energy_sup(snapshots, sys1.alpha, tau=t)

    def test_instantaneous_window(self, sys1, snaps):
        taus, snapshots = snaps
        s = snapshots[3]
        val = truncated_energy_sup(snapshots, sys1.alpha, taus[3], taus[3])
        assert val == pytest.approx(s.energy_per_star(sys1.alpha).sum())

    def test_nested_window_monotonicity(self, sys1, snaps):
        taus, snapshots = snaps
        inner = truncated_energy_sup(snapshots, sys1.alpha, 0.5, 1.0)
        outer = truncated_energy_sup(snapshots, sys1.alpha, 0.25, 1.5)
        assert inner <= outer

    def test_comparison_chain(self, sys1, snaps):
        # S(t1,t2) <= S(t2) <= S(t1,t2) + S(t1)
        taus, snapshots = snaps
        t1, t2 = 0.5, 1.75
        s_12 = truncated_energy_sup(snapshots, sys1.alpha, t1, t2)
        s_2 = energy_sup(snapshots, sys1.alpha, tau=t2)
        s_1 = energy_sup(snapshots, sys1.alpha, tau=t1)
        assert s_12 <= s_2 + 1e-15
        assert s_2 <= s_12 + s_1 + 1e-15


class TestDamping:
    def test_zero_velocity(self, sys1):
        state = zero_state(sys1.basis, 1)
        assert damping_value(sys1, state) == 0.0

    def test_prefactor_at_default_gamma(self, sys1):
        # beta = 3/2 so 2 - beta = 1/2
        state = zero_state(sys1.basis, 1)
        state.velocity[0] = identity_field(sys1.basis, 0.1)
        base = x_norm_sq(sys1, state.velocity[0], sys1.order_cap, 0) / sys1.delta
        assert damping_value(sys1, state) == pytest.approx(0.5 * base, rel=1e-12)

    def test_doubling_delta_halves(self):
        a = make_system([[2.0, 0, 0]], delta=1e-3, radial_shells=10, degree=5)
        b = make_system([[2.0, 0, 0]], delta=2e-3, radial_shells=10, degree=5)
        sa = zero_state(a.basis, 1)
        sb = zero_state(b.basis, 1)
        sa.velocity[0] = identity_field(a.basis, 0.1)
        sb.velocity[0] = identity_field(b.basis, 0.1)
        assert damping_value(b, sb) == pytest.approx(0.5 * damping_value(a, sa), rel=1e-12)

    def test_nonnegative(self, sys1):
        rng = np.random.default_rng(19)
        state = zero_state(sys1.basis, 1)
        state.velocity[0] = FieldRep(sys1.basis, rng.standard_normal((3, sys1.basis.n)))
        assert damping_value(sys1, state) >= 0.0


class TestDecayFit:
    def test_pure_exponential(self):
        taus = np.linspace(0, 3, 13)
        slope, _ = fit_log_decay(taus, np.exp(-2.0 * taus))
        assert slope == pytest.approx(-2.0, abs=1e-12)

    def test_constant_series(self):
        taus = np.linspace(0, 3, 8)
        slope, _ = fit_log_decay(taus, np.full_like(taus, 3.7))
        assert slope == pytest.approx(0.0, abs=1e-13)

    def test_intercept_tracks_delta_squared(self):
        taus = np.linspace(0, 3, 9)
        _, b1 = fit_log_decay(taus, 0.1**2 * np.exp(-2 * taus))
        _, b2 = fit_log_decay(taus, 0.05**2 * np.exp(-2 * taus))
        assert b1 - b2 == pytest.approx(2.0 * np.log(2.0), rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            fit_log_decay([0, 1, 2, 3, 4], [1.0, 0.5, 0.0, 0.1, 0.1])

    def test_rejects_short_series(self):
        with pytest.raises(DomainError):
            fit_log_decay([0, 1, 2], [1.0, 0.5, 0.25])
