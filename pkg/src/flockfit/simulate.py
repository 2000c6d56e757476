"""Seeded generators for coordination events and convergence checks.

Each generator drops agents into a square arena, locks agent 0 onto a
fixed random target heading, and lets the rest update their headings by
one of the candidate strategies while positions advance one unit step
per tick. The stored headings are always re-derived from the stored
positions, so a round trip through the CSV format is exact.
"""

from dataclasses import dataclass

import numpy as np

from .dirmath import dist_dir, norm_deg, unit_vec, vec_angle
from .errors import InvalidParam, InvalidSpec, NoInformedAgent
from .strategies import delaunay_adjacency

HM = "HM"
LRA = "LRA"
HM_AND_LRA = "HM_AND_LRA"
MIXED = "MIXED"
RANDOM = "RANDOM"
MODELS = (HM, LRA, HM_AND_LRA, MIXED, RANDOM)


@dataclass(frozen=True)
class SimSpec:
    model: str
    n_agents: int = 20
    n_steps: int = 400
    rho: float | None = None
    mix_prob: float = 0.5
    seed: int = 0
    arena: float = 100.0
    speed: float = 1.0

    def validate(self):
        if self.model not in MODELS:
            raise InvalidSpec(f"unknown model {self.model!r}")
        if self.n_agents < 2:
            raise InvalidSpec("n_agents must be >= 2")
        if self.n_steps < 2:
            raise InvalidSpec("n_steps must be >= 2")
        if self.model == HM:
            if self.rho is None or not 0.0 <= self.rho <= 1.0:
                raise InvalidSpec("HM requires rho in [0, 1]")
        elif self.rho is not None:
            raise InvalidSpec("rho is only meaningful for the HM model")
        if not 0.0 <= self.mix_prob <= 1.0:
            raise InvalidSpec("mix_prob must be in [0, 1]")
        if self.arena <= 0 or self.speed <= 0:
            raise InvalidSpec("arena and speed must be positive")


@dataclass
class TrajectorySet:
    """Positions (n, T+1, 2), derived headings (n, T), informed agent
    indices, and where the data came from."""

    positions: np.ndarray
    directions: np.ndarray
    informed: frozenset = frozenset()
    provenance: object = None

    @property
    def n_agents(self):
        return self.positions.shape[0]

    @property
    def n_steps(self):
        return self.directions.shape[1]


@dataclass(frozen=True)
class ConvergenceReport:
    epsilon: float
    converged_at: int | None
    bound: float | None = None


def _pair_mean_into(out, u_prev, prev, rows, leader=0):
    """For each agent index in rows, set out to the mean heading of its
    own and the leader's previous unit vectors (previous heading if the
    two cancel)."""
    rows = np.asarray(rows, dtype=int)
    if rows.size == 0:
        return
    v = u_prev[rows] + u_prev[leader]
    r = np.hypot(v[:, 0], v[:, 1])
    out[rows] = np.where(r < 1e-12, prev[rows], vec_angle(v[:, 0], v[:, 1]))


def _neighbor_mean_into(out, u_prev, prev, adjacency, rows):
    """For each agent index in rows, set out to the mean previous heading
    over its Delaunay neighbor set."""
    for i in rows:
        idx = sorted(adjacency[i])
        v = u_prev[idx].sum(axis=0)
        out[i] = prev[i] if np.hypot(v[0], v[1]) < 1e-12 else vec_angle(v[0], v[1])


def simulate(spec):
    """Generate one coordination event; bit-identical for a fixed seed.

    Agent 0 is informed: it draws the target heading uniformly at random
    and holds it to the end (except under RANDOM, where every agent
    redraws uniformly each step). Uninformed updates per model:

    * HM: with probability rho the agent averages its own and the
      informed agent's previous headings, otherwise it keeps its own.
    * LRA: average the previous headings of Delaunay neighbors at the
      current positions.
    * HM_AND_LRA: agents 1..9 use HM with rho = 1, the rest use LRA.
    * MIXED: each agent each step uses HM with rho = 1 with probability
      mix_prob, otherwise LRA.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, T = spec.n_agents, spec.n_steps
    positions = np.empty((n, T + 1, 2))
    directions = np.empty((n, T))

    if spec.model == RANDOM:
        target = None
        chosen = norm_deg(rng.uniform(-180.0, 180.0, n))
    else:
        target = norm_deg(rng.uniform(-180.0, 180.0))
        chosen = np.empty(n)
        chosen[0] = target
        chosen[1:] = norm_deg(rng.uniform(-180.0, 180.0, n - 1))
    positions[:, 0] = rng.uniform(0.0, spec.arena, (n, 2))

    for t in range(T):
        if t > 0:
            prev = directions[:, t - 1]
            u_prev = unit_vec(prev)
            if spec.model == RANDOM:
                chosen = norm_deg(rng.uniform(-180.0, 180.0, n))
            else:
                chosen = prev.copy()
                if spec.model == HM:
                    mask = rng.random(n - 1) < spec.rho
                    _pair_mean_into(out=chosen, u_prev=u_prev, prev=prev,
                                    rows=1 + np.nonzero(mask)[0])
                elif spec.model == LRA:
                    adjacency = delaunay_adjacency(positions[:, t])
                    _neighbor_mean_into(chosen, u_prev, prev, adjacency, range(1, n))
                elif spec.model == HM_AND_LRA:
                    _pair_mean_into(chosen, u_prev, prev, np.arange(1, min(10, n)))
                    if n > 10:
                        adjacency = delaunay_adjacency(positions[:, t])
                        _neighbor_mean_into(chosen, u_prev, prev, adjacency,
                                            range(10, n))
                else:  # MIXED
                    pick_hm = rng.random(n - 1) < spec.mix_prob
                    hm_rows = 1 + np.nonzero(pick_hm)[0]
                    lra_rows = 1 + np.nonzero(~pick_hm)[0]
                    _pair_mean_into(chosen, u_prev, prev, hm_rows)
                    if lra_rows.size:
                        adjacency = delaunay_adjacency(positions[:, t])
                        _neighbor_mean_into(chosen, u_prev, prev, adjacency, lra_rows)
                chosen[0] = target
        positions[:, t + 1] = positions[:, t] + spec.speed * unit_vec(chosen)
        # store the heading implied by the actual position step so the
        # derived-directions invariant holds exactly
        diff = positions[:, t + 1] - positions[:, t]
        directions[:, t] = vec_angle(diff[:, 0], diff[:, 1])

    return TrajectorySet(
        positions=positions,
        directions=directions,
        informed=frozenset({0}),
        provenance=spec,
    )


def compute_hm_bound(initial_dirs, target_dir, epsilon, p_star, n):
    """Upper bound on the expected step count for every agent to come
    within epsilon of the target under the hierarchical model: n times
    the worst agent's log2(initial gap / epsilon) / p_star, with
    already-converged agents contributing zero."""
    if p_star <= 0:
        raise InvalidParam("p_star must be positive")
    if epsilon <= 0:
        raise InvalidParam("epsilon must be positive")
    gaps = dist_dir(np.asarray(initial_dirs, dtype=float), target_dir)
    ratio = np.maximum(np.atleast_1d(gaps) / epsilon, 1.0)
    return float(n * np.max(np.log2(ratio) / p_star))


def check_convergence(ts, epsilon):
    """First step from which every agent stays within epsilon degrees of
    the informed agent's heading, or None if that never happens."""
    if not ts.informed:
        raise NoInformedAgent("trajectory set has no informed agent")
    w = min(ts.informed)
    gaps = dist_dir(ts.directions, ts.directions[w][None, :])
    worst = gaps.max(axis=0)
    bad = np.nonzero(worst > epsilon)[0]
    if bad.size == 0:
        converged_at = 0
    elif bad[-1] == ts.n_steps - 1:
        converged_at = None
    else:
        converged_at = int(bad[-1]) + 1
    bound = None
    spec = ts.provenance
    if isinstance(spec, SimSpec) and spec.model == HM and spec.rho:
        bound = compute_hm_bound(
            ts.directions[:, 0], ts.directions[w, 0], epsilon, spec.rho, ts.n_agents
        )
    return ConvergenceReport(epsilon=epsilon, converged_at=converged_at, bound=bound)
