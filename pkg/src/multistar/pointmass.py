"""Classical point-mass N-body integrator used as a centroid oracle.

Accelerations follow the standard mutually attractive form

    a_i = - sum_{j != i} m_j (x_i - x_j) / |x_i - x_j|^3

(G = 1).  States advance with the classical 4-stage Runge-Kutta scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NearContactError


@dataclass
class ParticleSystem:
    positions: np.ndarray   # (N, 3)
    velocities: np.ndarray  # (N, 3)
    masses: np.ndarray      # (N,)

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        self.masses = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if np.any(self.masses <= 0):
            raise DomainError("masses must be positive")


def accelerations(positions, masses, r_min=1e-8):
    n = positions.shape[0]
    acc = np.zeros_like(positions)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d = positions[i] - positions[j]
            r = np.linalg.norm(d)
            if r < r_min:
                raise NearContactError(f"particles {i} and {j} within {r_min}")
            acc[i] -= masses[j] * d / r**3
    return acc


def integrate_pointmasses(system, t_end, dt, r_min=1e-8):
    """RK4 trajectory; returns (times, positions (T, N, 3), velocities)."""
    x = system.positions.copy()
    v = system.velocities.copy()
    m = system.masses
    if x.shape[0] > 1:
        # refuse coincident initial positions
        accelerations(x, m, r_min)
    steps = int(round(t_end / dt))
    times = np.empty(steps + 1)
    xs = np.empty((steps + 1, *x.shape))
    vs = np.empty_like(xs)
    times[0] = 0.0
    xs[0] = x
    vs[0] = v
    for s in range(steps):
        k1x = v
        k1v = accelerations(x, m, r_min)
        k2x = v + 0.5 * dt * k1v
        k2v = accelerations(x + 0.5 * dt * k1x, m, r_min)
        k3x = v + 0.5 * dt * k2v
        k3v = accelerations(x + 0.5 * dt * k2x, m, r_min)
        k4x = v + dt * k3v
        k4v = accelerations(x + dt * k3x, m, r_min)
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        times[s + 1] = (s + 1) * dt
        xs[s + 1] = x
        vs[s + 1] = v
    return times, xs, vs


def two_body_energy(positions, velocities, masses):
    """Total mechanical energy (kinetic + pairwise potential), G = 1."""
    kin = 0.5 * np.sum(masses[:, None] * velocities**2)
    pot = 0.0
    n = positions.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            pot -= masses[i] * masses[j] / np.linalg.norm(positions[i] - positions[j])
    return kin + pot


def centroid_deviation(times, fluid_centroids, oracle_positions):
    """Max deviation of fluid centroids from point-particle positions,
    normalised by the instantaneous minimum pairwise separation (or by the
    largest position scale when there is a single star)."""
    fluid = np.asarray(fluid_centroids, dtype=float)
    oracle = np.asarray(oracle_positions, dtype=float)
    n = fluid.shape[1]
    worst = 0.0
    for t in range(fluid.shape[0]):
        dev = np.max(np.linalg.norm(fluid[t] - oracle[t], axis=1))
        if n >= 2:
            seps = [np.linalg.norm(oracle[t, i] - oracle[t, j])
                    for i in range(n) for j in range(i + 1, n)]
            scale = min(seps)
        else:
            scale = max(1.0, float(np.max(np.abs(oracle[t]))))
        worst = max(worst, dev / scale)
    return float(worst)
