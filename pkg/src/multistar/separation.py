"""Strong-separation gate, overlap check, and configuration generators.

The gate bounds, over every star pair, the infimum over lambda in [0, 1] and
reference points x, z of

    |(1 - lambda)(mu_k(x) - mu_k'(z)) + lambda (c_k - c_k')|.

For constant repulsive velocities the (x, z) dependence drops and the inner
problem is the exact distance from the origin to a segment; otherwise (x, z)
pairs are sampled and the segment distance is taken per sample (the segment
minimiser is a convex quadratic with a closed-form argmin, so no iterative
lambda search is needed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kinematics import MuSpec

SSC_BASE = 3.0


@dataclass
class SeparationReport:
    ssc_value: float
    required: float
    passed: bool
    argmin: dict
    pairwise_center_distances: np.ndarray
    overlap_ok: bool


def segment_distance_to_origin(a, b):
    """min over lambda in [0,1] of |(1-lambda) a + lambda b| and the argmin."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    dd = float(np.dot(d, d))
    lam = 0.0 if dd == 0.0 else float(np.clip(-np.dot(a, d) / dd, 0.0, 1.0))
    return float(np.linalg.norm(a + lam * d)), lam


def _sample_ball(rng, n):
    pts = rng.standard_normal((n, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / 3.0)


def check_overlap(centers):
    """Initial unit balls must not touch: min pairwise center distance > 2."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    n = centers.shape[0]
    if n < 2:
        return True, np.zeros(0)
    dists = []
    for i in range(n):
        for j in range(i + 1, n):
            dists.append(np.linalg.norm(centers[i] - centers[j]))
    dists = np.array(dists)
    return bool(np.min(dists) > 2.0), dists


def ssc_min(centers, mu_specs, eps2=0.1, n_samples=1000, seed=0):
    """Separation gate over all pairs; returns a SeparationReport.

    The required level is 3 + eps2.  n_samples (x, z) pairs per star pair are
    drawn only when a non-constant mu is involved.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    n = centers.shape[0]
    if n < 2:
        raise DomainError("separation gate needs at least two stars")
    overlap_ok, dists = check_overlap(centers)
    rng = np.random.default_rng(seed)
    best = np.inf
    argmin = {}
    for i in range(n):
        for j in range(i + 1, n):
            dc = centers[i] - centers[j]
            if mu_specs[i].is_constant and mu_specs[j].is_constant:
                dmu = mu_specs[i].const - mu_specs[j].const
                val, lam = segment_distance_to_origin(dmu, dc)
                cand = [(val, lam, None, None)]
            else:
                xs = _sample_ball(rng, n_samples)
                zs = _sample_ball(rng, n_samples)
                mu_i = mu_specs[i].eval(xs)
                mu_j = mu_specs[j].eval(zs)
                cand = []
                for s in range(n_samples):
                    val, lam = segment_distance_to_origin(mu_i[s] - mu_j[s], dc)
                    cand.append((val, lam, xs[s], zs[s]))
            v, lam, x, z = min(cand, key=lambda c: c[0])
            if v < best:
                best = v
                argmin = {"pair": (i, j), "lambda": lam,
                          "x": None if x is None else x.tolist(),
                          "z": None if z is None else z.tolist()}
    required = SSC_BASE + eps2
    return SeparationReport(
        ssc_value=float(best),
        required=float(required),
        passed=bool(best >= required),
        argmin=argmin,
        pairwise_center_distances=dists,
        overlap_ok=overlap_ok,
    )


def hexagon_centers(R):
    """Six stars on a regular hexagon of circumradius R in the z = 0 plane.

    Adjacent-vertex distance equals R; with mu = center the gate value is R.
    """
    if R <= 0:
        raise DomainError("hexagon radius must be positive")
    ang = np.pi / 3.0 * np.arange(6)
    centers = np.stack([R * np.cos(ang), R * np.sin(ang), np.zeros(6)], axis=1)
    return centers, [MuSpec.constant(c) for c in centers]
