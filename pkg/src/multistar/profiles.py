"""Initial enthalpy profiles and the physical-vacuum boundary check.

A star's initial density is rho0 = (delta * W)^alpha with alpha = 1/(gamma-1).
W lives on the star's own ball; on the reference ball we work with the
translated profile.  Admissible profiles are positive inside, vanish on the
boundary, and behave like the boundary distance there (so the squared sound
speed has a finite negative normal slope: the physical vacuum condition).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .domain import integrate

PROFILE_KINDS = ("parabolic", "cone-mollified", "custom-polynomial")


@dataclass(frozen=True)
class DensityProfile:
    """Closed-form enthalpy profile translated to the reference ball.

    kind: analytic family name.
    center: the star's Eulerian center.
    alpha: 1/(gamma - 1).
    delta: density smallness parameter.
    poly: radial polynomial coefficients in r^2 (custom-polynomial only);
          the translated profile is then poly(r^2), not forced to vanish
          at r = 1, so inadmissible profiles can be built and then caught
          by the vacuum check.
    """

    kind: str
    center: np.ndarray
    alpha: float
    delta: float
    poly: tuple = ()

    def enthalpy(self, pts):
        """Translated profile W~ at reference points (shape (n, 3) or (3,))."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r2 = np.sum(pts**2, axis=1)
        if self.kind == "parabolic":
            return 1.0 - r2
        if self.kind == "cone-mollified":
            return (1.0 - r2) / (1.0 + r2)
        vals = np.zeros_like(r2)
        for k, c in enumerate(self.poly):
            vals += c * r2**k
        return vals

    def enthalpy_gradient(self, pts):
        """Analytic gradient of the translated profile, shape (n, 3)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r2 = np.sum(pts**2, axis=1)
        if self.kind == "parabolic":
            return -2.0 * pts
        if self.kind == "cone-mollified":
            return -4.0 * pts / (1.0 + r2)[:, None] ** 2
        dv = np.zeros_like(r2)
        for k, c in enumerate(self.poly):
            if k > 0:
                dv += c * k * r2 ** (k - 1)
        return 2.0 * pts * dv[:, None]

    def enthalpy_alpha(self, pts):
        """W~^alpha, clipped at zero to guard rounding at the boundary."""
        return np.clip(self.enthalpy(pts), 0.0, None) ** self.alpha


def make_profile(kind, center, alpha, delta, poly=None):
    """Construct a named profile; unknown kinds are a configuration error."""
    if kind not in PROFILE_KINDS:
        raise ConfigurationError(f"unknown profile kind {kind!r}; choose from {PROFILE_KINDS}")
    if kind == "custom-polynomial":
        if poly is None or len(poly) == 0:
            raise ConfigurationError("custom-polynomial profile needs radial coefficients")
        poly = tuple(float(c) for c in poly)
    else:
        poly = ()
    return DensityProfile(kind=kind, center=np.asarray(center, dtype=float),
                          alpha=float(alpha), delta=float(delta), poly=poly)


def fibonacci_sphere(n):
    """n quasi-uniform unit vectors (golden-angle spiral); deterministic."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = np.pi * (1.0 + np.sqrt(5.0)) * k
    s = np.sqrt(1.0 - z**2)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


def check_physical_vacuum(profile, gamma, n_boundary=200):
    """Evaluate the squared-sound-speed normal slope on boundary samples.

    c0^2 = gamma * delta * W~, so the outward slope at |x| = 1 is
    gamma * delta * (grad W~ . n).  Passes iff the profile vanishes on the
    boundary, is positive inside, and the slope is strictly negative and
    finite at every sample.  Returns a report dict; never raises.
    """
    dirs = fibonacci_sphere(n_boundary)
    w_boundary = profile.enthalpy(dirs)
    boundary_vanishes = bool(np.max(np.abs(w_boundary)) < 1e-12)
    interior = dirs * 0.5
    positive_inside = bool(np.min(profile.enthalpy(interior)) > 0)
    slope = gamma * profile.delta * np.sum(profile.enthalpy_gradient(dirs) * dirs, axis=1)
    finite = bool(np.all(np.isfinite(slope)))
    negative = bool(np.max(slope) < 0)
    return {
        "boundary_vanishes": boundary_vanishes,
        "positive_inside": positive_inside,
        "slope_min": float(np.min(slope)),
        "slope_max": float(np.max(slope)),
        "passed": boundary_vanishes and positive_inside and finite and negative,
    }


def distance_equivalence_constants(profile, grid):
    """Sampled constants of the W~ ~ d equivalence: max of W~/d and d/W~."""
    mask = grid.boundary_distance > 1e-9
    ratio = profile.enthalpy(grid.nodes[mask]) / grid.boundary_distance[mask]
    upper = float(np.max(ratio))
    lower = float(np.min(ratio))
    return lower, upper


def total_mass(profile, grid):
    """Quadrature of delta^alpha W~^alpha over the reference ball."""
    return profile.delta ** profile.alpha * integrate(grid, profile.enthalpy_alpha(grid.nodes))
