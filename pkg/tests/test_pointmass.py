"""Point-mass integrator invariants and closed-form orbit checks."""

import numpy as np
import pytest

from multistar.errors import NearContactError
from multistar.pointmass import (
    ParticleSystem,
    integrate_pointmasses,
    two_body_energy,
)


class TestBasics:
    def test_single_particle_straight_line(self):
        sys_ = ParticleSystem([[1.0, 2.0, 3.0]], [[0.5, -0.2, 0.1]], [1.0])
        times, xs, _ = integrate_pointmasses(sys_, t_end=5.0, dt=0.05)
        expect = sys_.positions[0] + times[:, None] * sys_.velocities[0]
        assert np.max(np.abs(xs[:, 0, :] - expect)) < 1e-12

    def test_momentum_conserved_symmetric_pair(self):
        sys_ = ParticleSystem([[-1.0, 0, 0], [1.0, 0, 0]],
                              [[0, -0.3, 0], [0, 0.3, 0]], [1.0, 1.0])
        _, xs, vs = integrate_pointmasses(sys_, t_end=2.0, dt=0.01)
        com = xs.mean(axis=1)
        assert np.max(np.abs(com)) < 1e-10
        mom = vs.sum(axis=1)
        assert np.max(np.abs(mom)) < 1e-10

    def test_close_encounter_aborts(self):
        sys_ = ParticleSystem([[-0.01, 0, 0], [0.01, 0, 0]],
                              [[0.0, 0, 0], [0.0, 0, 0]], [1.0, 1.0])
        with pytest.raises(NearContactError):
            integrate_pointmasses(sys_, t_end=1.0, dt=0.001, r_min=0.05)


class TestCircularOrbit:
    def test_angular_speed(self):
        # two equal masses m on a circle of diameter d: centripetal balance
        # m^2/d^2 = m omega^2 (d/2)  =>  omega^2 = 2 m / d^3
        m, d = 0.8, 2.0
        omega = np.sqrt(2.0 * m / d**3)
        v = omega * d / 2.0
        sys_ = ParticleSystem([[-d / 2, 0, 0], [d / 2, 0, 0]],
                              [[0, -v, 0], [0, v, 0]], [m, m])
        period = 2.0 * np.pi / omega
        times, xs, _ = integrate_pointmasses(sys_, t_end=period, dt=period / 2000)
        # after one period the particles return to their starting points
        assert np.linalg.norm(xs[-1, 0] - xs[0, 0]) / d < 1e-3

    def test_energy_and_separation_drift(self):
        m, d = 1.0, 2.0
        omega = np.sqrt(2.0 * m / d**3)
        v = omega * d / 2.0
        sys_ = ParticleSystem([[-d / 2, 0, 0], [d / 2, 0, 0]],
                              [[0, -v, 0], [0, v, 0]], [m, m])
        period = 2.0 * np.pi / omega
        _, xs, vs = integrate_pointmasses(sys_, t_end=10 * period, dt=period / 1000)
        e0 = two_body_energy(xs[0], vs[0], sys_.masses)
        e1 = two_body_energy(xs[-1], vs[-1], sys_.masses)
        assert abs(e1 - e0) / abs(e0) < 1e-6
        # angular momentum about z
        def ang(x, v):
            return np.sum(sys_.masses * (x[:, 0] * v[:, 1] - x[:, 1] * v[:, 0]))
        assert abs(ang(xs[-1], vs[-1]) - ang(xs[0], vs[0])) / abs(ang(xs[0], vs[0])) < 1e-6


class TestTimeReversal:
    def test_forward_backward_roundtrip(self):
        sys_ = ParticleSystem([[-1.5, 0, 0], [1.5, 0.3, 0]],
                              [[0.1, -0.4, 0], [-0.1, 0.4, 0]], [1.0, 1.2])
        dt = 0.01
        _, xs, vs = integrate_pointmasses(sys_, t_end=1.0, dt=dt)
        back = ParticleSystem(xs[-1], -vs[-1], sys_.masses)
        _, xb, vb = integrate_pointmasses(back, t_end=1.0, dt=dt)
        assert np.max(np.abs(xb[-1] - sys_.positions)) < 1e-7
        assert np.max(np.abs(vb[-1] + sys_.velocities)) < 1e-7
