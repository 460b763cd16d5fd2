"""Run configuration: versioned JSON schema, strict validation, system assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import VelocitySpec
from .errors import ConfigurationError
from .kinematics import MuSpec
from .system import StarSystem, admissible_gamma, make_system

SCHEMA_VERSION = 1
DTAU_MAX = 0.05

_TOP_KEYS = {"schema_version", "gamma", "delta", "epsilon2", "seed", "stars",
             "grid", "time", "order_cap", "toggles"}
_STAR_KEYS = {"center", "mu", "profile", "velocity"}
_GRID_KEYS = {"radial_shells", "angular_points", "degree"}
_TIME_KEYS = {"tau_end", "dtau", "snapshot_every"}
_TOGGLE_KEYS = {"gravity", "gradient_form_rhs", "identity_checks"}
_MU_KEYS = {"kind", "value", "matrix"}
_PROFILE_KEYS = {"kind", "coefficients"}
_VEL_KEYS = {"kind", "value"}


@dataclass
class RunConfig:
    gamma: float = 1.5
    delta: float = 1e-3
    epsilon2: float = 0.1
    seed: int = 0
    centers: np.ndarray = None
    mu_specs: list = None
    profile_kinds: list = None
    profile_polys: list = None
    velocity_specs: list = None
    radial_shells: int = 16
    angular_points: int = 110
    degree: int = 6
    tau_end: float = 3.0
    dtau: float = 0.01
    snapshot_every: float = 0.1
    order_cap: int = 2
    gravity: bool = True
    gradient_form_rhs: bool = False
    identity_checks: bool = True

    @property
    def n_stars(self):
        return self.centers.shape[0]


def _unknown(mapping, allowed, path, errors):
    for key in mapping:
        if key not in allowed:
            errors.append(f"{path}.{key}: unknown key")


def _parse_star(idx, raw, errors):
    path = f"stars[{idx}]"
    if not isinstance(raw, dict):
        errors.append(f"{path}: must be an object")
        return None
    _unknown(raw, _STAR_KEYS, path, errors)
    center = np.asarray(raw.get("center", []), dtype=float)
    if center.shape != (3,):
        errors.append(f"{path}.center: need a 3-vector")
        center = np.zeros(3)

    mu_raw = raw.get("mu", {"kind": "center"})
    _unknown(mu_raw, _MU_KEYS, f"{path}.mu", errors)
    kind = mu_raw.get("kind", "center")
    if kind == "center":
        mu = MuSpec.constant(center)
    elif kind == "constant":
        mu = MuSpec.constant(np.asarray(mu_raw.get("value", center), dtype=float))
    elif kind == "affine":
        mu = MuSpec.affine(np.asarray(mu_raw.get("value", center), dtype=float),
                           np.asarray(mu_raw.get("matrix", np.zeros((3, 3))), dtype=float))
    else:
        errors.append(f"{path}.mu.kind: unknown kind {kind!r}")
        mu = MuSpec.constant(center)

    prof_raw = raw.get("profile", {"kind": "parabolic"})
    _unknown(prof_raw, _PROFILE_KEYS, f"{path}.profile", errors)
    prof_kind = prof_raw.get("kind", "parabolic")
    poly = prof_raw.get("coefficients")

    vel_raw = raw.get("velocity", {"kind": "zero"})
    _unknown(vel_raw, _VEL_KEYS, f"{path}.velocity", errors)
    vkind = vel_raw.get("kind", "zero")
    if vkind == "zero":
        vel = VelocitySpec.zero()
    elif vkind == "constant":
        vel = VelocitySpec.constant(np.asarray(vel_raw.get("value", [0, 0, 0]), dtype=float))
    elif vkind == "radial":
        vel = VelocitySpec.radial(float(vel_raw.get("value", 0.0)))
    else:
        errors.append(f"{path}.velocity.kind: unknown kind {vkind!r}")
        vel = VelocitySpec.zero()
    return center, mu, prof_kind, poly, vel


def config_from_dict(raw):
    """Validate a raw mapping; raises ConfigurationError listing all violations."""
    errors = []
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be an object")
    _unknown(raw, _TOP_KEYS, "config", errors)
    if raw.get("schema_version") != SCHEMA_VERSION:
        errors.append(f"config.schema_version: must be {SCHEMA_VERSION}")

    cfg = RunConfig()
    cfg.gamma = float(raw.get("gamma", cfg.gamma))
    if not admissible_gamma(cfg.gamma):
        errors.append(f"config.gamma: {cfg.gamma} not of the form 1+1/n (n>=2) "
                      f"and not in (1, 14/13)")
    cfg.delta = float(raw.get("delta", cfg.delta))
    if cfg.delta <= 0:
        errors.append("config.delta: must be positive")
    cfg.epsilon2 = float(raw.get("epsilon2", cfg.epsilon2))
    cfg.seed = int(raw.get("seed", cfg.seed))

    stars = raw.get("stars", [])
    if not stars:
        errors.append("config.stars: at least one star required")
    centers, mus, kinds, polys, vels = [], [], [], [], []
    for i, s in enumerate(stars):
        parsed = _parse_star(i, s, errors)
        if parsed:
            c, m, k, p, v = parsed
            centers.append(c)
            mus.append(m)
            kinds.append(k)
            polys.append(p)
            vels.append(v)
    cfg.centers = np.array(centers) if centers else np.zeros((0, 3))
    cfg.mu_specs = mus
    cfg.profile_kinds = kinds
    cfg.profile_polys = polys if any(p is not None for p in polys) else None
    cfg.velocity_specs = vels

    grid = raw.get("grid", {})
    _unknown(grid, _GRID_KEYS, "config.grid", errors)
    cfg.radial_shells = int(grid.get("radial_shells", cfg.radial_shells))
    cfg.angular_points = int(grid.get("angular_points", cfg.angular_points))
    cfg.degree = int(grid.get("degree", cfg.degree))
    if cfg.radial_shells < 2:
        errors.append("config.grid.radial_shells: must be >= 2")
    if cfg.angular_points < 6:
        errors.append("config.grid.angular_points: must be >= 6")
    if not 1 <= cfg.degree <= 10:
        errors.append("config.grid.degree: must be in [1, 10]")

    time_raw = raw.get("time", {})
    _unknown(time_raw, _TIME_KEYS, "config.time", errors)
    cfg.tau_end = float(time_raw.get("tau_end", cfg.tau_end))
    cfg.dtau = float(time_raw.get("dtau", cfg.dtau))
    cfg.snapshot_every = float(time_raw.get("snapshot_every", cfg.snapshot_every))
    if cfg.tau_end <= 0:
        errors.append("config.time.tau_end: must be positive")
    if not 0 < cfg.dtau <= DTAU_MAX:
        errors.append(f"config.time.dtau: must be in (0, {DTAU_MAX}]")
    if cfg.snapshot_every <= 0:
        errors.append("config.time.snapshot_every: must be positive")

    cfg.order_cap = int(raw.get("order_cap", cfg.order_cap))
    if not 0 <= cfg.order_cap <= 3:
        errors.append("config.order_cap: must be in [0, 3]")

    toggles = raw.get("toggles", {})
    _unknown(toggles, _TOGGLE_KEYS, "config.toggles", errors)
    cfg.gravity = bool(toggles.get("gravity", cfg.gravity))
    cfg.gradient_form_rhs = bool(toggles.get("gradient_form_rhs", cfg.gradient_form_rhs))
    cfg.identity_checks = bool(toggles.get("identity_checks", cfg.identity_checks))

    if errors:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(errors))
    return cfg


def parse_config(path):
    """Parse and validate a JSON run configuration file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as ex:
        raise ConfigurationError(f"cannot read config {path}: {ex}") from ex
    except json.JSONDecodeError as ex:
        raise ConfigurationError(f"malformed config {path}: {ex}") from ex
    return config_from_dict(raw)


def build_system(cfg):
    """Assemble the StarSystem described by a validated RunConfig."""
    return make_system(
        cfg.centers,
        gamma=cfg.gamma,
        delta=cfg.delta,
        radial_shells=cfg.radial_shells,
        angular_points=cfg.angular_points,
        degree=cfg.degree,
        mu_specs=cfg.mu_specs,
        profile_kinds=cfg.profile_kinds,
        profile_polys=cfg.profile_polys,
        eps2=cfg.epsilon2,
        order_cap=cfg.order_cap,
        gravity_on=cfg.gravity,
    )


def hexagon_config_dict(R=3.2, delta=1e-3, tau_end=3.0, dtau=0.02,
                        radial_shells=8, angular_points=91):
    """Canonical six-star example configuration as a raw dict."""
    from .separation import hexagon_centers
    centers, _ = hexagon_centers(R)
    return {
        "schema_version": SCHEMA_VERSION,
        "gamma": 1.5,
        "delta": delta,
        "stars": [{"center": c.tolist(), "mu": {"kind": "center"},
                   "profile": {"kind": "parabolic"},
                   "velocity": {"kind": "zero"}} for c in centers],
        "grid": {"radial_shells": radial_shells, "angular_points": angular_points,
                 "degree": 6},
        "time": {"tau_end": tau_end, "dtau": dtau, "snapshot_every": 0.25},
        "toggles": {"gravity": True, "gradient_form_rhs": False,
                    "identity_checks": False},
    }
