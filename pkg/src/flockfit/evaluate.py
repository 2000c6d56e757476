"""Degree-space evaluation, cross-validation, and dataset classification.

Risks here are plain circular distances in degrees between predicted
and actual headings, averaged over the predictable steps of an event
(everything from step p_ar on, so every strategy is scored on the same
rows). The cross-validation protocol splits events into folds, fits on
the concatenated training events, selects per-agent weights on the
concatenated validation events, and reports degree risks on the
concatenated test events.
"""

from dataclasses import dataclass, field

import numpy as np

from .dirmath import dist_dir, unit_vec, vec_angle
from .errors import InconsistentAgents, SingleClass
from .fit import (
    DEFAULT_AR_LAG,
    DEFAULT_KAPPA_GRID,
    DEFAULT_OMEGA,
    DEFAULT_SIGMA,
    as_events,
    base_angle_batch,
    fit_agent_models,
    label_strategy,
    prediction_angle_batch,
)
from .forest import RandomForest
from .strategies import (
    StrategyContext,
    predict_ar,
    predict_hm_fit,
    predict_informed,
    predict_lra,
    predict_mix,
)

OPT = "OPT"
HM = "HM"
LRA = "LRA"
AR = "AR"
INFORMED = "INFORMED"
PURE_ORDER = (OPT, HM, LRA, AR)


@dataclass
class RiskReport:
    """Mean degree errors per strategy, their per-step distributions, and
    the fitted weights behind the OPT column."""

    mean_risks: dict
    per_agent_risks: dict  # strategy -> (n_agents,) mean degrees
    mean_w: np.ndarray  # (n_agents, 3) fold-averaged weights
    labels: list
    per_step: dict  # strategy -> (n_steps_eval, ) pooled mean error per step
    per_step_quantiles: dict  # strategy -> dict of q -> array
    provenance: dict = field(default_factory=dict)


@dataclass
class ClassificationReport:
    classes: list
    confusion: np.ndarray  # rows true, cols predicted
    per_class: dict  # class -> {"precision", "recall", "f1"}
    features: np.ndarray
    labels: list


def _context_for(ts, net, t, p_ar):
    hist_lo = max(0, t - max(p_ar, 1))
    return StrategyContext(
        positions=ts.positions[:, t],
        prev_directions=ts.directions[:, t - 1],
        history=ts.directions[:, hist_lo:t],
        network=net,
        informed_set=frozenset(),
        current_directions=ts.directions[:, t],
    )


def hm_predictor(net):
    return lambda ts, i, t, p_ar=DEFAULT_AR_LAG: predict_hm_fit(
        _context_for(ts, net, t, p_ar), i
    )


def lra_predictor():
    return lambda ts, i, t, p_ar=DEFAULT_AR_LAG: predict_lra(
        _context_for(ts, None, t, p_ar), i
    )


def ar_predictor(p=DEFAULT_AR_LAG):
    return lambda ts, i, t, p_ar=DEFAULT_AR_LAG: predict_ar(
        _context_for(ts, None, t, p_ar), i, p
    )


def mix_predictor(net, w, p=DEFAULT_AR_LAG):
    return lambda ts, i, t, p_ar=DEFAULT_AR_LAG: predict_mix(
        _context_for(ts, net, t, p_ar), i, w, p
    )


def informed_predictor():
    def predict(ts, i, t, p_ar=DEFAULT_AR_LAG):
        ctx = _context_for(ts, None, t, p_ar)
        ctx.informed_set = frozenset(ts.informed)
        return predict_informed(ctx, i)

    return predict


def risk_dir(ts, predictor, i, p_ar=DEFAULT_AR_LAG):
    """Mean circular distance in degrees between agent i's actual
    headings and the predictor's teacher-forced one-step predictions,
    over steps p_ar .. T-1."""
    errs = [
        dist_dir(ts.directions[i, t], predictor(ts, i, t, p_ar))
        for t in range(max(p_ar, 1), ts.n_steps)
    ]
    return float(np.mean(errs))


def _mix_angles(batch, w, i):
    """Headings of the embedded mixture for agent i from a prediction
    angle batch."""
    v = (
        w[0] * unit_vec(batch["hm"][i])
        + w[1] * unit_vec(batch["lra"][i])
        + w[2] * unit_vec(batch["ar"][i])
    )
    r = np.hypot(v[..., 0], v[..., 1])
    ang = vec_angle(v[..., 0], v[..., 1])
    prev = batch["target"][i]  # fallback is irrelevant at these scales
    return np.where(r < 1e-12, prev, ang)


def _batch_errors(events, net, weights, informed, p_ar, base_cache=None):
    """Per-strategy degree errors on a list of events.

    Returns dict strategy -> list of (n_agents, rows_event) error arrays,
    one per event. weights: (n_agents, 3) mixture weights for OPT.
    """
    base_cache = base_cache if base_cache is not None else {}
    per = {k: [] for k in (OPT, HM, LRA, AR, INFORMED)}
    for ts in events:
        if id(ts) not in base_cache:
            base_cache[id(ts)] = base_angle_batch(ts, p_ar)
        batch = prediction_angle_batch(ts, net, p_ar, base_cache[id(ts)])
        tgt = batch["target"]
        per[HM].append(dist_dir(batch["hm"], tgt))
        per[LRA].append(dist_dir(batch["lra"], tgt))
        per[AR].append(dist_dir(batch["ar"], tgt))
        opt = np.stack(
            [dist_dir(_mix_angles(batch, weights[i], i), tgt[i]) for i in
             range(ts.n_agents)]
        )
        per[OPT].append(opt)
        if informed:
            idx = sorted(informed)
            v = unit_vec(ts.directions[idx]).sum(axis=0)
            inf_ang = vec_angle(v[..., 0], v[..., 1])[p_ar:]
            inf_err = dist_dir(ts.directions[:, p_ar:], inf_ang[None, :])
            for j in idx:
                inf_err[j] = 0.0
            per[INFORMED].append(inf_err)
    return {k: v for k, v in per.items() if v}


def best_fit_strategy(test, i, w, net, p_ar=DEFAULT_AR_LAG):
    """Risks of the fitted mixture and each pure strategy for one agent,
    plus the argmin label (ties resolve OPT, HM, LRA, AR)."""
    events = as_events(test)
    weights = np.tile(np.asarray(w, dtype=float), (events[0].n_agents, 1))
    errs = _batch_errors(events, net, weights, set(), p_ar)
    risks = {
        k: float(np.concatenate(errs[k], axis=1)[i].mean()) for k in PURE_ORDER
    }
    best = min(risks.values())
    label = next(k for k in PURE_ORDER if risks[k] <= best + 1e-9)
    return label, risks


def _check_consistent(events):
    ids = None
    for ts in events:
        cur = None
        if isinstance(ts.provenance, dict):
            cur = ts.provenance.get("agent_ids")
        cur = tuple(cur) if cur is not None else ("n",) + (ts.n_agents,)
        if ids is None:
            ids = cur
        elif ids != cur:
            raise InconsistentAgents(f"agent identities differ across events: {ids} vs {cur}")


def cross_validate(
    datasets,
    folds=10,
    kappa_grid=DEFAULT_KAPPA_GRID,
    p_ar=DEFAULT_AR_LAG,
    seed=0,
    sigma=DEFAULT_SIGMA,
    omega=DEFAULT_OMEGA,
):
    """k-fold evaluation of the full fit/select/evaluate pipeline.

    Each fold takes one slice of events for testing and splits the rest
    in half into training and validation, echoing a 45/45/10 split at
    ten folds. Reported risks and weights are averaged over folds.
    """
    events = list(datasets)
    if len(events) < folds or folds < 2:
        raise ValueError("need at least `folds` datasets and folds >= 2")
    _check_consistent(events)
    n = events[0].n_agents
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(events))
    groups = np.array_split(order, folds)

    base_cache = {}
    sum_risks = {k: np.zeros(n) for k in (OPT, HM, LRA, AR, INFORMED)}
    sum_w = np.zeros((n, 3))
    step_errs = {k: [] for k in (OPT, HM, LRA, AR, INFORMED)}
    fold_rows = []
    for f in range(folds):
        test = [events[k] for k in groups[f]]
        rest = [events[k] for g in range(folds) if g != f for k in groups[g]]
        half = (len(rest) + 1) // 2
        train, val = rest[:half], rest[half:]
        if not val:  # degenerate split: validate on the training events
            val = train
        result = fit_agent_models(
            train, kappa_grid=kappa_grid, p_ar=p_ar, sigma=sigma, omega=omega,
            base_cache=base_cache,
        )
        net = result.network
        chosen = np.empty((n, 3))
        val_matrices = _agent_matrices(val, net, p_ar, base_cache)
        for i in range(n):
            best, best_risk = None, np.inf
            for model in result.models[i]:
                risk = embedded_risk_from(val_matrices, i, model.w)
                if risk < best_risk - 1e-12:
                    best, best_risk = model, risk
            chosen[i] = best.w
        informed = set(test[0].informed) if test[0].informed else set()
        errs = _batch_errors(test, net, chosen, informed, p_ar, base_cache)
        for k, chunks in errs.items():
            cat = np.concatenate(chunks, axis=1)
            sum_risks[k] += cat.mean(axis=1)
            step_errs[k].extend(chunks)
        sum_w += chosen
        fold_rows.append(
            {
                "fold": f,
                "mean_risks": {
                    k: float(np.concatenate(chunks, axis=1).mean())
                    for k, chunks in errs.items()
                },
                "w": chosen.copy(),
            }
        )

    mean_w = sum_w / folds
    per_agent = {k: v / folds for k, v in sum_risks.items() if step_errs[k]}
    mean_risks = {k: float(v.mean()) for k, v in per_agent.items()}
    labels = [label_strategy(mean_w[i]) for i in range(n)]

    # pool errors per step-within-event across agents, events, and folds
    per_step, per_q = {}, {}
    for k, chunks in step_errs.items():
        if not chunks:
            continue
        rows = min(c.shape[1] for c in chunks)
        pooled = np.concatenate([c[:, :rows] for c in chunks], axis=0)
        per_step[k] = pooled.mean(axis=0)
        per_q[k] = {
            q: np.percentile(pooled, q, axis=0) for q in (25, 50, 75)
        }
    return RiskReport(
        mean_risks=mean_risks,
        per_agent_risks={k: v for k, v in per_agent.items()},
        mean_w=mean_w,
        labels=labels,
        per_step=per_step,
        per_step_quantiles=per_q,
        provenance={
            "folds": folds,
            "seed": seed,
            "fold_details": fold_rows,
            "n_events": len(events),
        },
    )


def _agent_matrices(events, net, p_ar, base_cache=None):
    """Prediction angle batches for a list of events, reusable across
    agents."""
    base_cache = base_cache if base_cache is not None else {}
    out = []
    for e in events:
        if id(e) not in base_cache:
            base_cache[id(e)] = base_angle_batch(e, p_ar)
        out.append(prediction_angle_batch(e, net, p_ar, base_cache[id(e)]))
    return out


def embedded_risk_from(batches, i, w):
    """Mean squared embedded residual for agent i across prebuilt batches."""
    w = np.asarray(w, dtype=float)
    total, rows = 0.0, 0
    for b in batches:
        v = (
            w[0] * unit_vec(b["hm"][i])
            + w[1] * unit_vec(b["lra"][i])
            + w[2] * unit_vec(b["ar"][i])
        )
        resid = v - unit_vec(b["target"][i])
        total += float(np.sum(resid * resid))
        rows += b["target"].shape[1]
    return total / rows


def dataset_features(ts, p_ar=DEFAULT_AR_LAG, sigma=DEFAULT_SIGMA, omega=DEFAULT_OMEGA):
    """Componentwise median of per-agent weights fitted on one event with
    unconstrained kappa. This is the feature vector used to classify
    which regime generated a dataset."""
    result = fit_agent_models(
        ts, kappa_grid=((0.0, 0.0, 0.0),), p_ar=p_ar, sigma=sigma, omega=omega
    )
    W = np.stack([models[0].w for models in result.models])
    return np.median(W, axis=0)


def classify_datasets(
    labeled,
    folds=10,
    seed=0,
    p_ar=DEFAULT_AR_LAG,
    sigma=DEFAULT_SIGMA,
    omega=DEFAULT_OMEGA,
    n_trees=50,
    max_depth=4,
    features=None,
):
    """Fit per-dataset features and cross-validate a seeded random forest.

    labeled: sequence of (TrajectorySet, class label). Precomputed
    features may be passed to skip the fitting stage. Reports per-class
    precision, recall, F1, and the confusion matrix (rows = true class).
    """
    labeled = list(labeled)
    classes = sorted({lab for _ts, lab in labeled})
    if len(classes) < 2:
        raise SingleClass("need at least 2 distinct labels")
    if features is None:
        features = np.stack(
            [dataset_features(ts, p_ar, sigma, omega) for ts, _lab in labeled]
        )
    y = np.array([classes.index(lab) for _ts, lab in labeled])
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(labeled))
    groups = np.array_split(order, folds)
    confusion = np.zeros((len(classes), len(classes)), dtype=int)
    for f in range(folds):
        test_idx = groups[f]
        train_idx = np.concatenate([groups[g] for g in range(folds) if g != f])
        forest = RandomForest(
            n_trees=n_trees, max_depth=max_depth, seed=seed * 1000 + f
        )
        forest.fit(features[train_idx], y[train_idx])
        pred = forest.predict(features[test_idx])
        for t, p in zip(y[test_idx], pred):
            confusion[t, p] += 1
    per_class = {}
    for k, cls in enumerate(classes):
        tp = confusion[k, k]
        fp = confusion[:, k].sum() - tp
        fn = confusion[k, :].sum() - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {
            "precision": float(precision),
            "recall": float(recall),
            "f1": float(f1),
        }
    return ClassificationReport(
        classes=classes,
        confusion=confusion,
        per_class=per_class,
        features=features,
        labels=[lab for _ts, lab in labeled],
    )
