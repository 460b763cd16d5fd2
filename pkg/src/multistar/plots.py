"""Report figures rendered alongside the delimited output."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .diagnostics import fit_log_decay  # noqa: E402


def energy_figure(result, path):
    """Cumulative energy, curl energy, damping vs tau, with the local bound."""
    taus = result.taus
    S, C = result.energy_series()
    bound = 2.0 * (S[0] + C[0] + np.sqrt(result.system.delta))
    damp = [s.damping for s in result.snapshots]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(taus, S, label="energy $S_b$", lw=1.6)
    ax.plot(taus, C, label="curl energy $C_b$", lw=1.2)
    ax.plot(taus, damp, label="damping", lw=1.0, ls=":")
    ax.axhline(bound, color="crimson", ls="--", lw=1.0,
               label=r"$2(S_b(0)+C_b(0)+\sqrt{\delta})$")
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel("value")
    ax.set_yscale("log" if np.all(np.asarray(S[1:]) > 0) else "linear")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def geometry_figure(result, path):
    """Star diameters and the minimum inter-star distance against physical time."""
    ts = np.array([s.t for s in result.snapshots])
    dmax = np.array([np.max(s.diameters) for s in result.snapshots])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(ts, dmax, label="max star diameter", lw=1.6)
    seps = np.array([s.min_separation for s in result.snapshots])
    if np.all(np.isfinite(seps)):
        ax.plot(ts, seps, label="min star separation", lw=1.6)
    coef = np.polyfit(ts, dmax, 1)
    ax.plot(ts, np.polyval(coef, ts), ls="--", lw=0.9, color="gray",
            label=f"linear fit, slope {coef[0]:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("length")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def tidal_figure(result, path):
    """Tidal norm decay on a log scale with the fitted slope."""
    taus = result.taus
    vals = np.array([s.tidal_norm for s in result.snapshots])
    mask = vals > 0
    if np.sum(mask) < 5:
        return False
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(taus[mask], vals[mask], "o-", ms=3, lw=1.2, label="tidal norm")
    slope, intercept = fit_log_decay(taus[mask], vals[mask])
    ax.semilogy(taus[mask], np.exp(intercept + slope * taus[mask]), "--", lw=0.9,
                color="gray", label=f"fit slope {slope:.3f}")
    ax.set_xlabel(r"$\tau$")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def nbody_figure(times, positions, path):
    """Particle trajectories projected on the xy plane."""
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    for i in range(positions.shape[1]):
        ax.plot(positions[:, i, 0], positions[:, i, 1], lw=1.2)
        ax.plot(positions[0, i, 0], positions[0, i, 1], "ko", ms=3)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
