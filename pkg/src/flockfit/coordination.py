"""Following relations, coordination intervals, and following networks.

The pairwise primitive is a shift-based similarity: series Sj follows Si
when some nonnegative shift of Sj onto Si gives a high mean circular
similarity. Sliding-window application of that primitive yields
coordination intervals, initiators, a per-window dynamic following
network, a leadership ranking, and finally a DAG of follow
probabilities that the model-fitting stage consumes.
"""

from dataclasses import dataclass, field

import numpy as np

from .dirmath import dist_dir
from .errors import TooShort

# Relation outcomes
NONE = "none"
FOLLOWS = "follows"
STRICTLY_FOLLOWS = "strictly_follows"

# Similarities within this tolerance of the per-pair maximum count as
# ties when selecting the delay, so float noise on near-constant series
# cannot fabricate a positive delay.
DELAY_TIE_TOL = 1e-9


@dataclass(frozen=True)
class FollowResult:
    """Best shifted similarity in [0, 1] and the minimal shift attaining it."""

    similarity: float
    delay: int | None = None


@dataclass(frozen=True)
class CoordinationInterval:
    """Time span [start, end] in which every agent pair follows one way or the other."""

    start: int
    end: int
    sigma: float


@dataclass
class DynamicFollowNetwork:
    """Per-window directed follow graphs; edge (i, j) means i follows j."""

    n_agents: int
    window_starts: list[int]
    window_len: int
    edges: list[dict[tuple[int, int], float]]  # one dict per window


@dataclass
class ProbFollowNetwork:
    """DAG of follow probabilities; edge (i, j) -> p means i follows j."""

    n_agents: int
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def out_edges(self, i):
        return {j: p for (a, j), p in self.edges.items() if a == i}


def _window_starts(total, window, stride):
    """Window start indices covering [0, total); a tail window is added
    so the final steps are always covered."""
    if window > total:
        raise TooShort(f"series length {total} shorter than window {window}")
    starts = list(range(0, total - window + 1, max(1, stride)))
    last = total - window
    if starts[-1] != last:
        starts.append(last)
    return starts


def _shift_similarity_matrix(dirs, max_shift):
    """All-pairs shifted similarities.

    dirs: (n, T) headings. Returns (sims, delays) where sims[i, j] is the
    maximum over shifts dt in [0, max_shift] of the mean circular
    similarity between dirs[i, : T-dt] and dirs[j, dt :], and delays[i, j]
    is the smallest dt within DELAY_TIE_TOL of that maximum. sims[i, j]
    close to 1 with delays[i, j] > 0 indicates that j echoes i after a lag.
    """
    d = np.asarray(dirs, dtype=float)
    n, T = d.shape
    if T <= max_shift:
        raise TooShort(f"series length {T} must exceed max shift {max_shift}")
    all_sims = np.empty((max_shift + 1, n, n))
    for dt in range(max_shift + 1):
        a = d[:, None, : T - dt]
        b = d[None, :, dt:]
        all_sims[dt] = 1.0 - dist_dir(a, b).mean(axis=2) / 180.0
    best = all_sims.max(axis=0)
    near = all_sims >= best[None, :, :] - DELAY_TIE_TOL
    delays = near.argmax(axis=0)
    return best, delays


def sim_foll(si, sj, omega):
    """Best similarity of sj onto si over shifts 0..omega, plus the delay.

    The shift-dt similarity compares si[: T-dt] with sj[dt :], i.e. it
    asks how well sj reproduces si dt steps later. Ties in the maximum
    (within 1e-9) resolve to the smallest delay.
    """
    si = np.asarray(si, dtype=float)
    sj = np.asarray(sj, dtype=float)
    if si.shape != sj.shape or si.ndim != 1:
        raise ValueError("series must be 1-d and equal length")
    T = si.size
    if T <= omega:
        raise TooShort(f"series length {T} must exceed omega {omega}")
    if omega < 0:
        raise ValueError("omega must be >= 0")
    sims, delays = _shift_similarity_matrix(np.stack([si, sj]), omega)
    return FollowResult(similarity=float(sims[0, 1]), delay=int(delays[0, 1]))


def following_relation(si, sj, sigma, omega):
    """Classify whether sj follows si: none, follows, or strictly_follows."""
    r = sim_foll(si, sj, omega)
    if r.similarity >= sigma:
        return STRICTLY_FOLLOWS if r.delay > 0 else FOLLOWS
    return NONE


def _pair_follow_mask(dirs, sigma, omega):
    """Boolean matrices (follows, strict) where entry [i, j] says j follows i."""
    sims, delays = _shift_similarity_matrix(dirs, omega)
    follows = sims >= sigma
    np.fill_diagonal(follows, False)
    strict = follows & (delays > 0)
    return follows, strict


def _interval_is_coordinated(dirs, start, end, sigma, omega):
    """Exhaustive check that every unordered pair follows one way or the
    other within [start, end]."""
    sub = dirs[:, start : end + 1]
    shift = min(omega, sub.shape[1] - 1)
    follows, _ = _pair_follow_mask(sub, sigma, shift)
    n = dirs.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    return bool(np.all(follows[iu, ju] | follows[ju, iu]))


def detect_coordination_intervals(dirs, sigma, omega, window, density_percentile=50.0):
    """Find maximal intervals of group-wide following.

    A window of length `window` (stride window // 2, plus a tail window)
    counts as coordinated when its fraction of unordered agent pairs in
    a sigma-following relation is positive and at least the given
    percentile of all per-window densities. Runs of coordinated windows
    merge into candidate intervals, and each candidate is emitted only
    after an exhaustive all-pairs re-check over its full span; a failing
    run is split into its maximal verified sub-spans.
    """
    d = np.asarray(dirs, dtype=float)
    n, T = d.shape
    if n < 2:
        raise ValueError("need at least 2 agents")
    if T < window:
        raise TooShort(f"series length {T} shorter than window {window}")
    starts = _window_starts(T, window, window // 2)
    shift = min(omega, window - 1)
    iu, ju = np.triu_indices(n, k=1)
    densities = np.empty(len(starts))
    for k, s in enumerate(starts):
        follows, _ = _pair_follow_mask(d[:, s : s + window], sigma, shift)
        densities[k] = np.mean(follows[iu, ju] | follows[ju, iu])
    threshold = float(np.percentile(densities, density_percentile))
    coordinated = (densities >= threshold) & (densities > 0.0)

    intervals = []
    k = 0
    while k < len(starts):
        if not coordinated[k]:
            k += 1
            continue
        run_end = k
        while run_end + 1 < len(starts) and coordinated[run_end + 1]:
            run_end += 1
        # greedily extend verified spans inside the run
        a = k
        while a <= run_end:
            b = a
            good = _interval_is_coordinated(
                d, starts[a], starts[b] + window - 1, sigma, omega
            )
            if not good:
                a += 1
                continue
            while b + 1 <= run_end and _interval_is_coordinated(
                d, starts[a], starts[b + 1] + window - 1, sigma, omega
            ):
                b += 1
            intervals.append(
                CoordinationInterval(starts[a], starts[b] + window - 1, sigma)
            )
            a = b + 1
        k = run_end + 1
    return intervals


def find_initiators(dirs, interval, sigma, omega):
    """Agents strictly followed (positive delay) by every other agent
    within the interval. May be empty."""
    d = np.asarray(dirs, dtype=float)
    sub = d[:, interval.start : interval.end + 1]
    shift = min(omega, sub.shape[1] - 1)
    _, strict = _pair_follow_mask(sub, sigma, shift)
    n = d.shape[0]
    out = set()
    for L in range(n):
        others = [i for i in range(n) if i != L]
        if all(strict[L, i] for i in others):
            out.add(L)
    return out


def build_dynamic_following_network(dirs, sigma, omega):
    """Windowed strict-following graphs.

    Windows have length omega with stride omega // 2 (plus a tail
    window); within a window shifts run up to omega - 1 so at least one
    step overlaps. Edge (i, j) with the attained similarity is added
    when i strictly follows j in that window.
    """
    d = np.asarray(dirs, dtype=float)
    n, T = d.shape
    if T < 2 * omega:
        raise TooShort(f"series length {T} must be at least 2*omega = {2 * omega}")
    starts = _window_starts(T, omega, omega // 2)
    shift = omega - 1
    per_window = []
    for s in starts:
        sims, delays = _shift_similarity_matrix(d[:, s : s + omega], shift)
        follows = sims >= sigma
        np.fill_diagonal(follows, False)
        strict = follows & (delays > 0)
        edges = {}
        for j, i in zip(*np.nonzero(strict)):
            # strict[j, i] means i follows j -> edge i -> j
            edges[(int(i), int(j))] = float(sims[j, i])
        per_window.append(edges)
    return DynamicFollowNetwork(
        n_agents=n, window_starts=starts, window_len=omega, edges=per_window
    )


def leadership_ranking(net):
    """Agents ordered by descending total incoming follow weight (the
    weight of being followed), ties broken by ascending agent index."""
    score = np.zeros(net.n_agents)
    for edges in net.edges:
        for (_i, j), w in edges.items():
            score[j] += w
    order = sorted(range(net.n_agents), key=lambda a: (-score[a], a))
    return order


def aggregate_to_dag(net, ranking):
    """Collapse a dynamic following network into a DAG of follow probabilities.

    Edges whose follower outranks the followed are dropped, which makes
    the graph acyclic. Each follower then keeps only its primary
    followee: the upward edge present in the most windows, with count
    ties resolved toward the better-ranked (more-followed) agent.
    Incidental co-follower correlations fire sporadically, while a real
    followee recurs in nearly every window its follower is active, so
    recurrence is what distinguishes them. The edge probability is the
    surviving count over the follower's active-window count (windows
    where it strictly follows anyone): "when i visibly follows, how
    often is it j". Any non-top agent without an edge gets a
    minimal-weight edge to the top-ranked agent so that every agent
    keeps a path to it.
    """
    n = net.n_agents
    n_windows = max(1, len(net.edges))
    rank_pos = {a: r for r, a in enumerate(ranking)}
    pair_count = {}
    active = np.zeros(n, dtype=int)
    for edges in net.edges:
        followers = {i for (i, _j) in edges}
        for i in followers:
            active[i] += 1
        for e in edges:
            pair_count[e] = pair_count.get(e, 0) + 1
    upward = {
        (i, j): cnt
        for (i, j), cnt in pair_count.items()
        if rank_pos[i] > rank_pos[j]  # keep only edges pointing up the ranking
    }
    out = {}
    for i in range(n):
        options = [(cnt, j) for (a, j), cnt in upward.items() if a == i]
        if not options:
            continue
        cnt, j = max(options, key=lambda o: (o[0], -rank_pos[o[1]], -o[1]))
        out[(i, j)] = cnt / active[i]
    top = ranking[0]
    for i in range(n):
        if i == top:
            continue
        if not any(a == i for (a, _j) in out):
            out[(i, top)] = 1.0 / n_windows
    return ProbFollowNetwork(n_agents=n, edges=out)
