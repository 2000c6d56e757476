"""Per-agent model fitting and selection.

For every agent the three pure predictors are evaluated one step ahead
along the true history (teacher forcing), their predictions embedded as
unit vectors, and the best convex mixture found by an exact solve of
the constrained least-squares problem

    minimize   sum_t || w1 u_hm(t) + w2 u_lra(t) + w3 u_ar(t) - u(t) ||^2
    subject to w >= kappa,  sum(w) = 1

over a grid of lower-bound vectors kappa. Fitting in the unit-vector
embedding keeps the objective convex where a raw-angle squared error
would be discontinuous at the +-180 seam; reported errors elsewhere are
still plain circular distances in degrees. With three weights the
feasible region is a (shifted) triangle, so instead of an iterative
solver we enumerate its faces: the interior stationary point, one
closed-form solve per edge, the three vertices, and the feasible point
closest to uniform weights. Ties resolve toward uniform weights.

Selection evaluates each fitted candidate's embedded risk on held-out
validation data, with the following network kept from training, and
keeps the argmin per agent.
"""

from dataclasses import dataclass

import numpy as np

from .coordination import (
    aggregate_to_dag,
    build_dynamic_following_network,
    leadership_ranking,
)
from .dirmath import unit_vec, vec_angle
from .errors import InfeasibleKappa, TooShort
from .strategies import DEFAULT_AR_LAG, delaunay_adjacency

HM = "HM"
LRA = "LRA"
AR = "AR"
MIXED = "MIXED"
STRATEGY_LABELS = (HM, LRA, AR)

DEFAULT_SIGMA = 0.95
DEFAULT_OMEGA = 60
DEFAULT_MIX_THRESHOLD = 0.35
# one unbiased candidate plus one biased toward each pure strategy
DEFAULT_KAPPA_GRID = (
    (0.0, 0.0, 0.0),
    (0.5, 0.0, 0.0),
    (0.0, 0.5, 0.0),
    (0.0, 0.0, 0.5),
)
# weights this close to the top weight count as tied with it
NEAR_TIE_BAND = 0.02


@dataclass
class PredictionMatrix:
    """Unit-vector embeddings of the three pure predictions and the
    actual heading, one row per fitted time step."""

    hm: np.ndarray
    lra: np.ndarray
    ar: np.ndarray
    target: np.ndarray

    @property
    def n_rows(self):
        return self.target.shape[0]


@dataclass
class FittedModel:
    agent: int
    w: np.ndarray
    kappa: np.ndarray
    train_risk: float


@dataclass
class FitResult:
    """Per-agent candidate models plus the network they were fitted against."""

    models: list  # models[i] is the list of FittedModel for agent i
    network: object
    p_ar: int


def as_events(train):
    """Normalize a TrajectorySet or a sequence of them to a list."""
    if hasattr(train, "directions"):
        return [train]
    events = list(train)
    if not events:
        raise ValueError("no events given")
    return events


def _vectors_to_angles(vx, vy, fallback):
    """Angles of mean vectors; entries whose resultant cancelled take the
    fallback heading."""
    r = np.hypot(vx, vy)
    ang = vec_angle(vx, vy)
    return np.where(r < 1e-12, fallback, ang)


def base_angle_batch(ts, p_ar=DEFAULT_AR_LAG):
    """Network-independent teacher-forced predictions for one event.

    Returns a dict of (n, T - p_ar) heading arrays for keys "lra", "ar"
    and "target", where column k predicts step p_ar + k. The
    triangulation for each step is computed once and shared across
    agents; callers may cache the result, as it never depends on the
    mined following network.
    """
    dirs = ts.directions
    n, T = dirs.shape
    if p_ar < 1:
        raise ValueError("p_ar must be >= 1")
    if T < p_ar + 2:
        raise TooShort(f"need at least {p_ar + 2} steps, got {T}")
    ts_range = np.arange(p_ar, T)
    m = ts_range.size
    u = unit_vec(dirs)  # (n, T, 2)
    prev = dirs[:, ts_range - 1]

    # neighbor agreement: Delaunay adjacency at the predicted step
    lv = np.empty((n, m, 2))
    for k, t in enumerate(ts_range):
        adjacency = delaunay_adjacency(ts.positions[:, t])
        amat = np.zeros((n, n))
        for i, nb in enumerate(adjacency):
            amat[i, sorted(nb)] = 1.0
        lv[:, k, :] = amat @ u[:, t - 1, :]
    lra = _vectors_to_angles(lv[..., 0], lv[..., 1], prev)

    # autoregressive: mean of own last p_ar headings
    csum = np.concatenate([np.zeros((n, 1, 2)), np.cumsum(u, axis=1)], axis=1)
    av = csum[:, ts_range, :] - csum[:, ts_range - p_ar, :]
    ar = _vectors_to_angles(av[..., 0], av[..., 1], prev)

    return {"lra": lra, "ar": ar, "target": dirs[:, ts_range]}


def prediction_angle_batch(ts, net, p_ar=DEFAULT_AR_LAG, base=None):
    """Teacher-forced pure predictions for all agents of one event.

    Returns a dict of (n, T - p_ar) heading arrays for keys "hm", "lra",
    "ar" and "target". Pass a precomputed `base_angle_batch` result to
    skip recomputing the network-independent columns.
    """
    dirs = ts.directions
    n, T = dirs.shape
    if base is None:
        base = base_angle_batch(ts, p_ar)
    ts_range = np.arange(p_ar, T)
    u = unit_vec(dirs)
    prev = dirs[:, ts_range - 1]

    # hierarchical: own previous heading plus probability-weighted
    # followed headings
    wmat = np.eye(n)
    for (i, j), p in net.edges.items():
        wmat[i, j] = p
    hv = np.einsum("ij,jtk->itk", wmat, u[:, ts_range - 1, :])
    hm = _vectors_to_angles(hv[..., 0], hv[..., 1], prev)

    return {"hm": hm, **base}


def build_prediction_matrix(train, net, i, p_ar=DEFAULT_AR_LAG):
    """Prediction matrix for agent i over one event or a list of events.

    Rows from multiple events are stacked; teacher forcing never crosses
    an event boundary.
    """
    batches = [prediction_angle_batch(e, net, p_ar) for e in as_events(train)]
    cols = {
        key: np.concatenate([b[key][i] for b in batches]) for key in
        ("hm", "lra", "ar", "target")
    }
    return PredictionMatrix(
        hm=unit_vec(cols["hm"]),
        lra=unit_vec(cols["lra"]),
        ar=unit_vec(cols["ar"]),
        target=unit_vec(cols["target"]),
    )


def _quadratic_terms(matrix):
    """Objective data (Q, c, const) so that the embedded squared error of
    weights w is w.Q.w - 2 c.w + const."""
    X = np.stack(
        [
            matrix.hm.reshape(-1),
            matrix.lra.reshape(-1),
            matrix.ar.reshape(-1),
        ],
        axis=1,
    )
    y = matrix.target.reshape(-1)
    return X.T @ X, X.T @ y, float(y @ y)


def _project_to_feasible(point, kappa):
    """Euclidean projection of a point onto {w >= kappa, sum(w) = 1}."""
    free = 1.0 - kappa.sum()
    if free <= 1e-15:
        return kappa.copy()
    x = np.asarray(point, dtype=float) - kappa
    # projection onto the scaled simplex {x >= 0, sum(x) = free}
    u_sorted = np.sort(x)[::-1]
    css = np.cumsum(u_sorted) - free
    idx = np.arange(1, 4)
    cond = u_sorted - css / idx > 0
    rho = idx[cond][-1]
    tau = css[rho - 1] / rho
    return kappa + np.maximum(x - tau, 0.0)


def validate_kappa(kappa):
    k = np.asarray(kappa, dtype=float)
    if k.shape != (3,):
        raise InfeasibleKappa("kappa must have exactly 3 components")
    if np.any(k < 0.0) or np.any(k > 1.0):
        raise InfeasibleKappa("kappa components must lie in [0, 1]")
    if k.sum() > 1.0 + 1e-12:
        raise InfeasibleKappa(f"kappa sums to {k.sum():.3f} > 1; no feasible weights")
    return k


def solve_support_qp(matrix, kappa=(0.0, 0.0, 0.0)):
    """Exact minimizer of the embedded least-squares objective over the
    kappa-shifted simplex. Accepts a PredictionMatrix or a prebuilt
    (Q, c, const) triple. Ties resolve toward uniform weights."""
    kappa = validate_kappa(kappa)
    if isinstance(matrix, tuple):
        Q, c, const = matrix
    else:
        Q, c, const = _quadratic_terms(matrix)

    candidates = []

    # interior stationary point of the sum-to-one slice
    kkt = np.zeros((4, 4))
    kkt[:3, :3] = 2.0 * Q
    kkt[:3, 3] = 1.0
    kkt[3, :3] = 1.0
    rhs = np.concatenate([2.0 * c, [1.0]])
    try:
        sol = np.linalg.solve(kkt, rhs)
        candidates.append(sol[:3])
    except np.linalg.LinAlgError:
        pass

    # edges: one weight pinned at its lower bound
    for a in range(3):
        b, cc = (a + 1) % 3, (a + 2) % 3
        s = 1.0 - kappa[a]
        lo, hi = kappa[b], s - kappa[cc]
        if hi < lo - 1e-15:
            continue
        w0 = np.zeros(3)
        w0[a], w0[cc] = kappa[a], s
        d = np.zeros(3)
        d[b], d[cc] = 1.0, -1.0
        curv = d @ Q @ d
        if curv > 1e-14:
            theta = (c @ d - d @ Q @ w0) / curv
        else:
            theta = s / 2.0  # flat edge: stay as close to uniform as it allows
        theta = float(np.clip(theta, lo, hi))
        w = w0 + theta * d
        candidates.append(w)

    # vertices of the feasible triangle
    for a in range(3):
        w = kappa.copy()
        w[a] += 1.0 - kappa.sum()
        candidates.append(w)

    # feasible point closest to uniform weights (canonical tie winner)
    candidates.append(_project_to_feasible(np.full(3, 1.0 / 3.0), kappa))

    feasible = [
        w
        for w in candidates
        if np.all(np.isfinite(w))
        and np.all(w >= kappa - 1e-9)
        and abs(w.sum() - 1.0) <= 1e-9
    ]
    objs = [float(w @ Q @ w - 2.0 * (c @ w) + const) for w in feasible]
    best = min(objs)
    tol = 1e-9 * max(1.0, abs(best))
    tied = [w for w, o in zip(feasible, objs) if o <= best + tol]
    uniform = np.full(3, 1.0 / 3.0)
    tied.sort(key=lambda w: (float(np.sum((w - uniform) ** 2)), tuple(w)))
    return tied[0]


def fit_agent_models(
    train,
    kappa_grid=DEFAULT_KAPPA_GRID,
    p_ar=DEFAULT_AR_LAG,
    sigma=DEFAULT_SIGMA,
    omega=DEFAULT_OMEGA,
    network=None,
    base_cache=None,
):
    """Fit every agent's candidate models on training events.

    Mines the following network from the concatenated training headings
    (unless one is passed in), builds each agent's prediction matrix
    once, and solves the constrained least squares for every kappa in
    the grid. Returns a FitResult; result.models[i] lists one
    FittedModel per kappa for agent i. base_cache maps id(event) to a
    precomputed base_angle_batch, letting callers reuse the
    network-independent columns across fits.
    """
    if not kappa_grid:
        raise InfeasibleKappa("kappa grid is empty")
    kappas = [validate_kappa(k) for k in kappa_grid]
    events = as_events(train)
    if network is None:
        dirs_cat = np.concatenate([e.directions for e in events], axis=1)
        dyn = build_dynamic_following_network(dirs_cat, sigma, omega)
        network = aggregate_to_dag(dyn, leadership_ranking(dyn))
    base_cache = base_cache if base_cache is not None else {}
    batches = []
    for e in events:
        if id(e) not in base_cache:
            base_cache[id(e)] = base_angle_batch(e, p_ar)
        batches.append(prediction_angle_batch(e, network, p_ar, base_cache[id(e)]))
    n = events[0].n_agents
    models = []
    for i in range(n):
        cols = {
            key: np.concatenate([b[key][i] for b in batches])
            for key in ("hm", "lra", "ar", "target")
        }
        matrix = PredictionMatrix(
            hm=unit_vec(cols["hm"]),
            lra=unit_vec(cols["lra"]),
            ar=unit_vec(cols["ar"]),
            target=unit_vec(cols["target"]),
        )
        terms = _quadratic_terms(matrix)
        rows = matrix.n_rows
        agent_models = []
        for kappa in kappas:
            w = solve_support_qp(terms, kappa)
            risk = (w @ terms[0] @ w - 2.0 * (terms[1] @ w) + terms[2]) / rows
            agent_models.append(
                FittedModel(agent=i, w=w, kappa=kappa, train_risk=float(max(risk, 0.0)))
            )
        models.append(agent_models)
    return FitResult(models=models, network=network, p_ar=p_ar)


def embedded_risk(matrix, w):
    """Mean squared embedded residual of mixture weights w on a matrix."""
    Q, c, const = _quadratic_terms(matrix)
    w = np.asarray(w, dtype=float)
    return float(max(w @ Q @ w - 2.0 * (c @ w) + const, 0.0)) / matrix.n_rows


def select_agent_model(models_i, val, network, i, p_ar=DEFAULT_AR_LAG):
    """Pick the candidate with the lowest embedded risk on validation
    events; ties keep the earliest candidate in grid order."""
    if not models_i:
        raise ValueError("no candidate models for agent")
    matrix = build_prediction_matrix(val, network, i, p_ar)
    best, best_risk = None, np.inf
    for model in models_i:
        risk = embedded_risk(matrix, model.w)
        if risk < best_risk - 1e-12:
            best, best_risk = model, risk
    return best


def label_strategy(w, mix_threshold=DEFAULT_MIX_THRESHOLD):
    """Name the strategy a weight vector describes.

    MIXED when the runner-up weight reaches mix_threshold or sits within
    NEAR_TIE_BAND of the top weight; otherwise the label of the largest
    component.
    """
    w = np.asarray(w, dtype=float)
    order = np.argsort(-w, kind="stable")
    top, second = w[order[0]], w[order[1]]
    if second >= mix_threshold or top - second <= NEAR_TIE_BAND:
        return MIXED
    return STRATEGY_LABELS[order[0]]
