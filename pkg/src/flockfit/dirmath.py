"""Circular direction arithmetic in degrees.

All directions in this package are plane headings measured in degrees
against the x axis, normalized to the half-open interval (-180, 180].
Averages are taken by embedding each heading as a unit vector, summing,
and converting the resultant back to an angle. This agrees with the
ordinary arithmetic mean whenever the headings span less than half the
circle and stays well defined across the +-180 seam, where a naive
arithmetic mean does not.
"""

import numpy as np

from .errors import TooShort, ZeroResultant

# Weighted direction sums with a resultant below this length have no
# usable mean direction (perfectly opposed inputs).
RESULTANT_EPS = 1e-12


def norm_deg(angle):
    """Normalize an angle (scalar or array) into (-180, 180]."""
    a = np.asarray(angle, dtype=float)
    m = np.mod(a, 360.0)
    # mod lands in [0, 360); fold the upper half down, +0.0 clears -0.0
    m = np.where(m > 180.0, m - 360.0, m) + 0.0
    if np.ndim(angle) == 0:
        return float(m)
    return m


def dist_dir(a, b):
    """Circular distance between two headings, in [0, 180] degrees."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    d = np.where(d <= 180.0, d, 360.0 - d)
    if np.ndim(d) == 0:
        return float(d)
    return d


def unit_vec(deg):
    """Embed heading(s) as unit vectors; returns shape (..., 2)."""
    r = np.radians(np.asarray(deg, dtype=float))
    return np.stack([np.cos(r), np.sin(r)], axis=-1)


def vec_angle(vx, vy):
    """Heading of the vector (vx, vy), normalized to (-180, 180]."""
    return norm_deg(np.degrees(np.arctan2(vy, vx)))


def circular_mean(dirs, weights=None):
    """Weighted mean direction of `dirs` via the unit-vector embedding.

    When the positively-weighted directions are all identical the common
    value is returned unchanged (no embedding round trip), so singleton
    and constant means are exact. Raises ZeroResultant when the weighted
    vector sum cancels below 1e-12; callers fall back to the agent's
    previous heading in that case.
    """
    d = np.asarray(dirs, dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("dirs must be a nonempty 1-d sequence")
    if weights is None:
        w = np.ones_like(d)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != d.shape:
            raise ValueError("weights must match dirs in length")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
    pos = w > 0
    if not np.any(pos):
        raise ValueError("at least one weight must be positive")
    active = d[pos]
    if np.all(active == active[0]):
        return norm_deg(active[0])
    v = (unit_vec(d) * w[:, None]).sum(axis=0)
    if np.hypot(v[0], v[1]) < RESULTANT_EPS:
        raise ZeroResultant("direction sum cancelled; no mean direction")
    return vec_angle(v[0], v[1])


def directions_from_positions(positions):
    """Per-step headings of position series.

    positions: array (n_agents, n_points, 2) with n_points >= 2. Returns
    an array (n_agents, n_points - 1) where entry t is the heading of
    the displacement from point t to point t+1. Stationary steps
    (displacement shorter than 1e-12) inherit the previous heading; a
    stationary first step defaults to 0.
    """
    p = np.asarray(positions, dtype=float)
    if p.ndim != 3 or p.shape[2] != 2:
        raise ValueError("positions must have shape (n_agents, n_points, 2)")
    if p.shape[1] < 2:
        raise TooShort("need at least 2 positions per agent")
    diff = p[:, 1:, :] - p[:, :-1, :]
    moving = np.hypot(diff[..., 0], diff[..., 1]) >= 1e-12
    angles = vec_angle(diff[..., 0], diff[..., 1])
    out = np.empty(angles.shape, dtype=float)
    out[:, 0] = np.where(moving[:, 0], angles[:, 0], 0.0)
    for t in range(1, angles.shape[1]):
        out[:, t] = np.where(moving[:, t], angles[:, t], out[:, t - 1])
    return out
