"""Gravity quadratures against shell-theorem oracles, plus potential identities."""

import numpy as np
import pytest

from multistar.domain import FieldRep
from multistar.errors import DomainError, NearContactError
from multistar.gravity import (
    curl_residual,
    divergence_residual,
    gravity_bundle,
    parabolic_interior_magnitude,
    point_mass_field,
    potential_gradient,
    radial_decomposition_residual,
    self_field,
    tidal_field,
    tidal_field_total,
)
from multistar.kinematics import deformation_fields, zero_state
from multistar.profiles import total_mass
from multistar.system import make_system

PARABOLIC_MASS_UNIT = 32.0 * np.pi / 105.0


@pytest.fixture(scope="module")
def single():
    sys_ = make_system([[2.0, 0.0, 0.0]], delta=1.0, radial_shells=12)
    state = zero_state(sys_.basis, 1)
    fields = deformation_fields(state, sys_.centers, sys_.mu_specs)
    return sys_, state, fields


@pytest.fixture(scope="module")
def pair():
    sys_ = make_system([[-2.0, 0.0, 0.0], [2.0, 0.0, 0.0]], delta=0.1, radial_shells=12)
    state = zero_state(sys_.basis, 2)
    fields = deformation_fields(state, sys_.centers, sys_.mu_specs)
    return sys_, state, fields


class TestShellOracle:
    def test_exterior_magnitudes(self):
        p = make_system([[0.0, 0.0, 0.0]], delta=1.0, radial_shells=12).profiles[0]
        grid = make_system([[0.0, 0.0, 0.0]], delta=1.0, radial_shells=12).grid
        assert point_mass_field(p, grid, 2.0) == pytest.approx(PARABOLIC_MASS_UNIT / 4, rel=1e-9)
        assert point_mass_field(p, grid, 1.0) == pytest.approx(PARABOLIC_MASS_UNIT, rel=1e-9)
        assert point_mass_field(p, grid, 1e9) < 1e-17

    def test_interior_rejected(self, single):
        sys_, _, _ = single
        with pytest.raises(DomainError):
            point_mass_field(sys_.profiles[0], sys_.grid, 0.5)

    def test_self_field_boundary_limit(self, single):
        sys_, state, fields = single
        G = self_field(sys_, state, fields, 0, np.array([[1.0, 0, 0]]), scheme="polar")
        m = total_mass(sys_.profiles[0], sys_.grid)
        assert np.linalg.norm(G[0]) == pytest.approx(m, rel=1e-3)

    def test_self_field_points_inward(self, single):
        sys_, state, fields = single
        pts = np.array([[0.7, 0.1, -0.2]])
        G = self_field(sys_, state, fields, 0, pts, scheme="polar")
        assert np.dot(G[0], pts[0]) < 0

    def test_self_field_center_zero(self, single):
        sys_, state, fields = single
        G = self_field(sys_, state, fields, 0, np.array([[0.0, 0.0, 0.0]]), scheme="polar")
        assert np.linalg.norm(G[0]) < 1e-12

    def test_interior_closed_form(self, single):
        sys_, state, fields = single
        for r in (0.3, 0.5, 0.8):
            G = self_field(sys_, state, fields, 0, np.array([[r, 0, 0]]), scheme="polar")
            assert np.linalg.norm(G[0]) == pytest.approx(
                parabolic_interior_magnitude(sys_.profiles[0], r), rel=1e-6)

    def test_exterior_plain_scheme(self, single):
        sys_, state, fields = single
        m = total_mass(sys_.profiles[0], sys_.grid)
        for R in (2.0, 4.0):
            G = self_field(sys_, state, fields, 0, np.array([[0, 0, R]]), scheme="plain")
            assert np.linalg.norm(G[0]) == pytest.approx(m / R**2, rel=1e-3)


class TestDeltaScaling:
    def test_self_field_quarter_on_halving(self):
        mags = []
        for delta in (1.0, 0.5):
            sys_ = make_system([[2.0, 0, 0]], delta=delta, radial_shells=10, degree=5)
            state = zero_state(sys_.basis, 1)
            fields = deformation_fields(state, sys_.centers, sys_.mu_specs)
            G = self_field(sys_, state, fields, 0, np.array([[0.5, 0, 0]]), scheme="polar")
            mags.append(np.linalg.norm(G[0]))
        assert mags[1] / mags[0] == pytest.approx(0.25, rel=1e-12)

    def test_tidal_quarter_on_halving(self):
        mags = []
        for delta in (1.0, 0.5):
            sys_ = make_system([[-2.0, 0, 0], [2.0, 0, 0]], delta=delta,
                               radial_shells=10, degree=5)
            state = zero_state(sys_.basis, 2)
            fields = deformation_fields(state, sys_.centers, sys_.mu_specs)
            I = tidal_field(sys_, state, fields, 0, 1, np.array([[0.0, 0, 0]]))
            mags.append(np.linalg.norm(I[0]))
        assert mags[1] / mags[0] == pytest.approx(0.25, rel=1e-12)


class TestTidal:
    def test_point_mass_value(self, pair):
        # shell theorem: delta^2 m_unit * (-4,0,0)/4^3 at star 1's center point
        sys_, state, fields = pair
        I = tidal_field(sys_, state, fields, 0, 1, np.array([[0.0, 0, 0]]))
        expect = -0.01 * PARABOLIC_MASS_UNIT * 4.0 / 64.0
        assert I[0, 0] == pytest.approx(expect, rel=1e-3)
        assert abs(I[0, 1]) < 1e-15 and abs(I[0, 2]) < 1e-15

    def test_exponential_decay_with_frozen_separation(self, pair):
        sys_, state, fields = pair
        I0 = tidal_field(sys_, state, fields, 0, 1, np.array([[0.0, 0, 0]]))
        state2 = zero_state(sys_.basis, 2, tau=np.log(2.0))
        fields2 = deformation_fields(state2, sys_.centers, sys_.mu_specs)
        I1 = tidal_field(sys_, state2, fields2, 0, 1, np.array([[0.0, 0, 0]]))
        # mu = center freezes the zeta separation: pure e^{-tau} prefactor
        assert np.linalg.norm(I1[0]) == pytest.approx(0.5 * np.linalg.norm(I0[0]), rel=1e-12)

    def test_antisymmetry_of_mirrored_configuration(self, pair):
        # reflection across the mid-plane flips the axial component only
        sys_, state, fields = pair
        Ia = tidal_field(sys_, state, fields, 0, 1, np.array([[0.1, 0.2, 0.3]]))
        Ib = tidal_field(sys_, state, fields, 1, 0, np.array([[-0.1, 0.2, 0.3]]))
        assert Ia[0, 0] == pytest.approx(-Ib[0, 0], rel=1e-12)
        assert Ia[0, 1] == pytest.approx(Ib[0, 1], rel=1e-12)
        assert Ia[0, 2] == pytest.approx(Ib[0, 2], rel=1e-12)

    def test_far_field_matches_oracle(self):
        sys_ = make_system([[-3.0, 0, 0], [3.0, 0, 0]], delta=0.1, radial_shells=12)
        state = zero_state(sys_.basis, 2)
        fields = deformation_fields(state, sys_.centers, sys_.mu_specs)
        I = tidal_field(sys_, state, fields, 0, 1, np.array([[0.0, 0, 0]]))
        m = total_mass(sys_.profiles[1], sys_.grid)
        assert np.linalg.norm(I[0]) == pytest.approx(m / 36.0, rel=1e-2)

    def test_near_contact_guard(self):
        sys_ = make_system([[-1.05, 0, 0], [1.05, 0, 0]], delta=0.1,
                           radial_shells=10, degree=5)
        state = zero_state(sys_.basis, 2)
        fields = deformation_fields(state, sys_.centers, sys_.mu_specs)
        with pytest.raises(NearContactError):
            tidal_field(sys_, state, fields, 0, 1)

    def test_same_star_rejected(self, pair):
        sys_, state, fields = pair
        with pytest.raises(DomainError):
            tidal_field(sys_, state, fields, 0, 0)


class TestAssembledGradient:
    def test_single_star_no_tidal(self, single):
        sys_, state, fields = single
        pts = np.array([[0.4, 0.1, 0.0]])
        gp = potential_gradient(sys_, state, fields, 0, pts)
        G = self_field(sys_, state, fields, 0, pts)
        assert np.allclose(gp, -G)

    def test_far_limit_tidal_negligible(self):
        sys_ = make_system([[-500.0, 0, 0], [500.0, 0, 0]], delta=0.1,
                           radial_shells=10, degree=5)
        state = zero_state(sys_.basis, 2)
        fields = deformation_fields(state, sys_.centers, sys_.mu_specs)
        pts = np.array([[0.4, 0.1, 0.0]])
        gp = potential_gradient(sys_, state, fields, 0, pts)
        G = self_field(sys_, state, fields, 0, pts)
        assert np.linalg.norm(gp + G) / np.linalg.norm(G) < 1e-6

    def test_mirrored_pair_symmetry(self, pair):
        sys_, state, fields = pair
        Ta = tidal_field_total(sys_, state, fields, 0, np.array([[0.0, 0, 0]]))
        Tb = tidal_field_total(sys_, state, fields, 1, np.array([[0.0, 0, 0]]))
        assert Ta[0, 0] == pytest.approx(-Tb[0, 0], rel=1e-12)

    def test_bundle_cached(self, pair):
        sys_, state, fields = pair
        sys_._gravity_cache.clear()
        b1 = gravity_bundle(sys_, state, fields)
        b2 = gravity_bundle(sys_, state, fields)
        assert b1 is b2


class TestPotentialIdentities:
    def test_divergence_identity_static(self, single):
        sys_, state, fields = single
        G = self_field(sys_, state, fields, 0, None, scheme="polar")
        assert divergence_residual(sys_, state, fields, 0, G) < 0.05

    def test_divergence_identity_refines(self, single):
        # residual at a coarser radial resolution must not beat the finer one
        sys_c = make_system([[2.0, 0, 0]], delta=1.0, radial_shells=8, degree=5)
        st = zero_state(sys_c.basis, 1)
        fl = deformation_fields(st, sys_c.centers, sys_c.mu_specs)
        res_c = divergence_residual(sys_c, st, fl, 0)
        sys_, state, fields = single
        res_f = divergence_residual(sys_, state, fields, 0)
        assert res_f <= res_c + 1e-12

    def test_divergence_identity_perturbed(self, single):
        sys_, state, fields = single
        rng = np.random.default_rng(17)
        st = zero_state(sys_.basis, 1, tau=0.5)
        c = np.zeros((3, sys_.basis.n))
        deg = sys_.basis.exps.sum(axis=1)
        c[:, deg <= 2] = 0.01 * rng.standard_normal((3, int((deg <= 2).sum())))
        st.displacement[0] = FieldRep(sys_.basis, c)
        fl = deformation_fields(st, sys_.centers, sys_.mu_specs)
        assert divergence_residual(sys_, st, fl, 0) < 0.05

    def test_curl_identity_static(self, single):
        sys_, state, fields = single
        # delta = 1 here; the residual is scale-free relative to |G| ~ 1
        G = self_field(sys_, state, fields, 0, None, scheme="polar")
        assert curl_residual(sys_, state, fields, 0, G) < 1e-6

    def test_curl_identity_perturbed_small_relative(self, single):
        sys_, state, fields = single
        rng = np.random.default_rng(23)
        st = zero_state(sys_.basis, 1)
        c = np.zeros((3, sys_.basis.n))
        deg = sys_.basis.exps.sum(axis=1)
        c[:, deg <= 2] = 0.02 * rng.standard_normal((3, int((deg <= 2).sum())))
        st.displacement[0] = FieldRep(sys_.basis, c)
        fl = deformation_fields(st, sys_.centers, sys_.mu_specs)
        G = self_field(sys_, st, fl, 0, None, scheme="polar")
        scale = np.max(np.linalg.norm(G, axis=1))
        assert curl_residual(sys_, st, fl, 0, G) < 0.05 * scale

    def test_off_grid_consistency(self, single):
        # polar evaluation is pointwise; off-grid values interpolate smoothly
        sys_, state, fields = single
        pts_on = sys_.grid.nodes[:3]
        G_on = self_field(sys_, state, fields, 0, pts_on, scheme="polar")
        G_all = self_field(sys_, state, fields, 0, None, scheme="polar")
        assert np.allclose(G_on, G_all[:3], rtol=1e-10)


class TestRadialDecomposition:
    def test_polynomial_standins(self, single):
        sys_, _, _ = single
        rng = np.random.default_rng(31)
        for _ in range(5):
            F = FieldRep(sys_.basis, rng.standard_normal((3, sys_.basis.n)))
            assert radial_decomposition_residual(F) < 1e-10

    def test_radial_field(self, single):
        sys_, _, _ = single
        basis = sys_.basis
        # F = x * (1 + r^2): radial, within basis range
        c = np.zeros((3, basis.n))
        for i, e1 in enumerate([(1, 0, 0), (0, 1, 0), (0, 0, 1)]):
            c[i, basis._index[e1]] = 1.0
            for e2 in [(2, 0, 0), (0, 2, 0), (0, 0, 2)]:
                c[i, basis._index[tuple(np.add(e1, e2))]] = 1.0
        F = FieldRep(basis, c)
        assert radial_decomposition_residual(F) < 1e-10

    def test_quadrature_sampled_field(self, single):
        sys_, state, fields = single
        G = self_field(sys_, state, fields, 0, None, scheme="polar")
        rep = FieldRep.from_nodes(sys_.basis, G.T)
        # projection error only: the fitted field satisfies the identity exactly
        assert radial_decomposition_residual(rep) < 1e-6
