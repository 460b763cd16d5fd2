"""Shared problem setup: grid, basis, stars, and physical parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import BallBasis, build_grid
from .errors import ConfigurationError
from .kinematics import MuSpec
from .profiles import make_profile

GAMMA_BAND_TOP = 14.0 / 13.0


def admissible_gamma(gamma, tol=1e-9):
    """gamma = 1 + 1/n for an integer n >= 2, or 1 < gamma < 14/13."""
    if gamma <= 1.0:
        return False
    if gamma < GAMMA_BAND_TOP:
        return True
    n = 1.0 / (gamma - 1.0)
    return abs(n - round(n)) < tol and round(n) >= 2


@dataclass(frozen=True)
class GravityParams:
    """Quadrature controls for the potential integrals.

    fast_h: exclusion radius of the in-loop split scheme (local expansion
            correction 2 pi h^2 g); scaled off the radial spacing.
    polar_radial / polar_theta / polar_phi: the singularity-removing polar
            rule used by identity checks and oracles.
    d_safe: near-contact guard on the tidal denominator.
    """

    fast_h: float
    polar_radial: int
    polar_theta: int
    polar_phi: int
    d_safe: float = 0.5

    @classmethod
    def for_grid(cls, grid):
        n = grid.radial_shells
        return cls(
            fast_h=2.0 / n,
            polar_radial=max(10, n // 2 + 6),
            polar_theta=max(10, n),
            polar_phi=2 * max(10, n),
        )


@dataclass
class StarSystem:
    """Everything fixed over a run: discretisation, star data, parameters."""

    grid: object
    basis: BallBasis
    centers: np.ndarray          # (N, 3)
    mu_specs: list
    profiles: list
    gamma: float
    delta: float
    eps2: float = 0.1
    order_cap: int = 2
    gravity: GravityParams = None
    gravity_on: bool = True

    def __post_init__(self):
        if not admissible_gamma(self.gamma):
            raise ConfigurationError(
                f"gamma={self.gamma} not admissible: need 1 + 1/n (integer n >= 2) "
                f"or 1 < gamma < 14/13")
        if self.delta <= 0:
            raise ConfigurationError("delta must be positive")
        if self.gravity is None:
            self.gravity = GravityParams.for_grid(self.grid)
        self._gravity_cache = {}

    @property
    def alpha(self):
        return 1.0 / (self.gamma - 1.0)

    @property
    def beta(self):
        return 3.0 * (self.gamma - 1.0)

    @property
    def n_stars(self):
        return len(self.profiles)


def make_system(centers, gamma=1.5, delta=1e-3, radial_shells=16, angular_points=110,
                degree=6, mu_specs=None, profile_kinds=None, eps2=0.1, order_cap=2,
                gravity_on=True, profile_polys=None):
    """Build a StarSystem with the canonical defaults.

    mu defaults to the star's own center (the canonical repulsive velocity);
    profiles default to parabolic.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    n = centers.shape[0]
    grid = build_grid(radial_shells, angular_points)
    basis = BallBasis(grid, degree=degree, derivative_order_cap=max(4, order_cap + 2))
    if mu_specs is None:
        mu_specs = [MuSpec.constant(c) for c in centers]
    if profile_kinds is None:
        profile_kinds = ["parabolic"] * n
    alpha = 1.0 / (gamma - 1.0)
    profiles = []
    for k in range(n):
        poly = None if profile_polys is None else profile_polys[k]
        profiles.append(make_profile(profile_kinds[k], centers[k], alpha=alpha,
                                     delta=delta, poly=poly))
    return StarSystem(grid=grid, basis=basis, centers=centers, mu_specs=mu_specs,
                      profiles=profiles, gamma=gamma, delta=delta, eps2=eps2,
                      order_cap=order_cap, gravity_on=gravity_on)
