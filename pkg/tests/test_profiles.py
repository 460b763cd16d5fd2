"""Enthalpy profile values, vacuum-boundary check, and mass quadrature."""

import numpy as np
import pytest

from multistar.domain import build_grid
from multistar.errors import ConfigurationError
from multistar.profiles import (
    check_physical_vacuum,
    distance_equivalence_constants,
    make_profile,
    total_mass,
)

PARABOLIC_MASS_UNIT = 32.0 * np.pi / 105.0  # 4*pi*int_0^1 (1-r^2)^2 r^2 dr


@pytest.fixture(scope="module")
def grid():
    return build_grid(16, 110)


def parabolic(delta=1.0, alpha=2.0, center=(0.0, 0.0, 0.0)):
    return make_profile("parabolic", center, alpha=alpha, delta=delta)


class TestValues:
    def test_center_value(self):
        p = parabolic()
        assert p.enthalpy([0.0, 0.0, 0.0])[0] == pytest.approx(1.0)

    def test_boundary_vanishes(self):
        p = parabolic()
        assert p.enthalpy([1.0, 0.0, 0.0])[0] == pytest.approx(0.0, abs=1e-14)

    def test_half_radius(self):
        p = parabolic()
        assert p.enthalpy([0.5, 0.0, 0.0])[0] == pytest.approx(0.75)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            make_profile("gaussian", (0, 0, 0), alpha=2.0, delta=1.0)

    def test_gradient_matches_finite_differences(self):
        # independent oracle: central differences on the closed form
        for kind in ("parabolic", "cone-mollified"):
            p = make_profile(kind, (0, 0, 0), alpha=2.0, delta=1.0)
            rng = np.random.default_rng(5)
            pts = rng.uniform(-0.5, 0.5, size=(10, 3))
            h = 1e-6
            grad = p.enthalpy_gradient(pts)
            for ax in range(3):
                shift = np.zeros(3)
                shift[ax] = h
                fd = (p.enthalpy(pts + shift) - p.enthalpy(pts - shift)) / (2 * h)
                assert np.max(np.abs(fd - grad[:, ax])) < 1e-8


class TestVacuumCheck:
    def test_parabolic_slope(self):
        # d(c0^2)/dn = gamma*delta*(dW/dr) = -2*gamma*delta on the boundary
        rep = check_physical_vacuum(parabolic(delta=0.1), gamma=1.5)
        assert rep["passed"]
        assert rep["slope_min"] == pytest.approx(-0.3, rel=1e-12)
        assert rep["slope_max"] == pytest.approx(-0.3, rel=1e-12)

    def test_constant_profile_fails_precheck(self):
        p = make_profile("custom-polynomial", (0, 0, 0), alpha=2.0, delta=1.0, poly=[1.0])
        rep = check_physical_vacuum(p, gamma=1.5)
        assert not rep["boundary_vanishes"]
        assert not rep["passed"]

    def test_zero_delta_degenerate(self):
        rep = check_physical_vacuum(parabolic(delta=0.0), gamma=1.5)
        assert rep["slope_max"] == 0.0
        assert not rep["passed"]

    def test_cone_mollified_passes(self):
        p = make_profile("cone-mollified", (0, 0, 0), alpha=2.0, delta=0.2)
        assert check_physical_vacuum(p, gamma=1.5)["passed"]


class TestMass:
    def test_parabolic_unit_delta(self, grid):
        assert total_mass(parabolic(), grid) == pytest.approx(PARABOLIC_MASS_UNIT, rel=1e-10)

    def test_delta_scaling(self, grid):
        m = total_mass(parabolic(delta=0.1), grid)
        assert m == pytest.approx(PARABOLIC_MASS_UNIT * 1e-2, rel=1e-10)

    def test_zero_delta(self, grid):
        assert total_mass(parabolic(delta=0.0), grid) == 0.0

    def test_refinement_convergence(self):
        # non-polynomial integrand (cone-mollified, alpha=2): error must
        # drop strongly with radial refinement (Gauss rule, smooth integrand)
        p = make_profile("cone-mollified", (0, 0, 0), alpha=2.0, delta=1.0)
        fine = total_mass(p, build_grid(48, 110))
        err_coarse = abs(total_mass(p, build_grid(6, 110)) - fine)
        err_mid = abs(total_mass(p, build_grid(12, 110)) - fine)
        assert err_mid < err_coarse / 4 or err_mid < 1e-12


class TestDistanceEquivalence:
    def test_parabolic_constants_between_one_and_two(self, grid):
        # (1 - r^2) = (1 - r)(1 + r): ratio to d = 1 - r lies in [1, 2]
        lower, upper = distance_equivalence_constants(parabolic(), grid)
        assert 1.0 <= lower <= 2.0
        assert 1.0 <= upper <= 2.0

    def test_ratio_extends_smoothly(self, grid):
        # boundedness of the ratio's variation near r = 1
        p = parabolic()
        mask = grid.radii > 0.9
        ratio = p.enthalpy(grid.nodes[mask]) / grid.boundary_distance[mask]
        assert np.max(ratio) - np.min(ratio) < 0.25
