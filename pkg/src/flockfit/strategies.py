"""Candidate per-agent movement strategies.

Four pure predictors of an agent's next heading, plus their convex
mixture:

* hierarchical (HM): average the previous headings of the specific
  agents one follows, drawn from a probabilistic following network;
* neighbor agreement (LRA): average the previous headings of one's
  spatial Delaunay neighbors;
* autoregressive (AR): average one's own last p headings;
* informed (trained-individual): copy the current mean heading of the
  informed agents.

The simulation-side hierarchical predictor works on a sampled
realization of the network; the fitting-side variant uses the edge
probabilities as weights directly so that fitting stays deterministic.
All averaging is the unit-vector circular mean from `dirmath`.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .coordination import ProbFollowNetwork
from .dirmath import RESULTANT_EPS, circular_mean, norm_deg, unit_vec, vec_angle
from .errors import EmptyInformedSet, NonFinitePosition

logger = logging.getLogger(__name__)

HM = "HM"
LRA = "LRA"
AR = "AR"
INFORMED = "INFORMED"
MIX = "MIX"

DEFAULT_AR_LAG = 5


@dataclass
class StrategyContext:
    """Everything a predictor may look at for one time step.

    positions: (n, 2) agent positions at the step being predicted.
    prev_directions: (n,) headings from the previous step.
    history: (n, >=1) last headings per agent, oldest first.
    network: probabilistic following network (hierarchical predictors).
    informed_set: indices of agents locked to the target path.
    target_dir: the target heading, when one exists.
    current_directions: (n,) headings at the predicted step, observable
        only to the informed-strategy predictor.
    """

    positions: np.ndarray | None = None
    prev_directions: np.ndarray | None = None
    history: np.ndarray | None = None
    network: ProbFollowNetwork | None = None
    informed_set: frozenset = frozenset()
    target_dir: float | None = None
    current_directions: np.ndarray | None = None


def realize_network(net, rng):
    """Sample one realization of the network: each edge (i, j) is kept
    independently with probability p_{i,j}. Deterministic for a fixed
    rng state; edges are visited in sorted order."""
    out = set()
    for (i, j), p in sorted(net.edges.items()):
        if rng.random() < p:
            out.add((i, j))
    return out


def predict_hm_sim(ctx, i, realized_neighbors):
    """Simulation-side hierarchical update over a realized edge set.

    realized_neighbors must contain i itself; an informed agent ignores
    its neighbors and returns the target heading.
    """
    if i in ctx.informed_set:
        return norm_deg(ctx.target_dir)
    idx = sorted(realized_neighbors)
    return circular_mean(ctx.prev_directions[idx])


def predict_hm_fit(ctx, i):
    """Fitting-side hierarchical update: weighted mean of the agent's own
    previous heading (weight 1) and each followed agent's previous
    heading weighted by the follow probability. With no outgoing edges
    this degenerates to the agent's own previous heading."""
    out = ctx.network.out_edges(i)
    if not out:
        return norm_deg(ctx.prev_directions[i])
    idx = [i] + sorted(out)
    weights = [1.0] + [out[j] for j in sorted(out)]
    return circular_mean(ctx.prev_directions[idx], weights)


def _jitter_duplicates(points):
    """Displace exact duplicate coordinates by 1e-9 steps at golden-angle
    spacing so the triangulation sees distinct points. Deterministic."""
    pts = points.copy()
    seen = {}
    golden = 2.3999632297286533
    for k in range(len(pts)):
        key = (pts[k, 0], pts[k, 1])
        hits = seen.get(key, 0)
        seen[key] = hits + 1
        if hits:
            pts[k, 0] += 1e-9 * hits * np.cos(golden * hits)
            pts[k, 1] += 1e-9 * hits * np.sin(golden * hits)
    return pts


def delaunay_adjacency(positions):
    """Neighbor sets for all agents from one shared triangulation.

    Agents are neighbors when they share a triangle; every agent is its
    own neighbor. With fewer than 3 agents or degenerate (collinear)
    configurations the complete graph is returned.
    """
    pts = np.asarray(positions, dtype=float)
    n = len(pts)
    if not np.all(np.isfinite(pts)):
        raise NonFinitePosition("positions must be finite")
    if n <= 2:
        return [set(range(n)) for _ in range(n)]
    pts = _jitter_duplicates(pts)
    try:
        tri = Delaunay(pts)
    except QhullError:
        return [set(range(n)) for _ in range(n)]
    adj = [{i} for i in range(n)]
    for simplex in tri.simplices:
        for a in simplex:
            adj[a].update(int(b) for b in simplex)
    return adj


def delaunay_neighbors(positions, i):
    """Delaunay neighbor set of agent i (including i itself)."""
    return delaunay_adjacency(positions)[i]


def predict_lra(ctx, i, adjacency=None):
    """Neighbor-agreement update: mean previous heading over the agent's
    Delaunay neighbors. Informed agents return the target heading.
    Pass a precomputed adjacency to share one triangulation per step."""
    if i in ctx.informed_set:
        return norm_deg(ctx.target_dir)
    if adjacency is None:
        adjacency = delaunay_adjacency(ctx.positions)
    idx = sorted(adjacency[i])
    return circular_mean(ctx.prev_directions[idx])


def predict_ar(ctx, i, p=DEFAULT_AR_LAG):
    """Autoregressive update: mean of the agent's own last p headings,
    truncated to however much history exists."""
    hist = np.asarray(ctx.history[i], dtype=float)
    take = hist[-min(p, len(hist)):]
    return circular_mean(take)


def predict_informed(ctx, i):
    """Copy the informed agents: mean of their current headings. An
    informed agent returns its own current heading."""
    if not ctx.informed_set:
        raise EmptyInformedSet("no informed agents in context")
    if i in ctx.informed_set:
        return norm_deg(ctx.current_directions[i])
    idx = sorted(ctx.informed_set)
    return circular_mean(ctx.current_directions[idx])


def predict_mix(ctx, i, w, p=DEFAULT_AR_LAG):
    """Convex mixture of the three fitting-side pure predictors.

    w = (w_hm, w_lra, w_ar) on the simplex. Basis vectors short-circuit
    to the corresponding pure predictor so pure-weight mixtures agree
    with it bit for bit. A cancelled mixture falls back to the agent's
    previous heading.
    """
    w = np.asarray(w, dtype=float)
    pures = (predict_hm_fit, lambda c, a: predict_lra(c, a), lambda c, a: predict_ar(c, a, p))
    for k in range(3):
        if w[k] == 1.0 and w[(k + 1) % 3] == 0.0 and w[(k + 2) % 3] == 0.0:
            return pures[k](ctx, i)
    preds = [
        predict_hm_fit(ctx, i),
        predict_lra(ctx, i),
        predict_ar(ctx, i, p),
    ]
    v = (unit_vec(np.array(preds)) * w[:, None]).sum(axis=0)
    if np.hypot(v[0], v[1]) < RESULTANT_EPS:
        logger.warning("mixture cancelled for agent %d; keeping previous heading", i)
        return norm_deg(ctx.prev_directions[i])
    return vec_angle(v[0], v[1])
