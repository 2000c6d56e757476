import numpy as np
import pytest

from flockfit.coordination import ProbFollowNetwork
from flockfit.errors import InconsistentAgents, SingleClass
from flockfit.evaluate import (
    ar_predictor,
    best_fit_strategy,
    classify_datasets,
    cross_validate,
    dataset_features,
    informed_predictor,
    lra_predictor,
    risk_dir,
)
from flockfit.forest import RandomForest
from flockfit.simulate import SimSpec, TrajectorySet, simulate


def test_risk_dir_perfect_and_antipodal():
    ts = simulate(SimSpec(model="LRA", seed=2, n_steps=60))

    def perfect(t_s, i, t, p_ar=5):
        return t_s.directions[i, t]

    def antipodal(t_s, i, t, p_ar=5):
        return t_s.directions[i, t] + 180.0

    assert risk_dir(ts, perfect, 3) == 0.0
    assert risk_dir(ts, antipodal, 3) == pytest.approx(180.0)


def test_risk_dir_ar_on_random_near_ninety():
    ts = simulate(SimSpec(model="RANDOM", seed=6))
    risks = [risk_dir(ts, ar_predictor(), i) for i in (0, 5, 11)]
    assert all(85.0 <= r <= 95.0 for r in risks)


def test_informed_strategy_comparison_on_neighbor_data():
    """The trained-individual strategy loses to neighbor agreement on
    neighbor-agreement data."""
    ts = simulate(SimSpec(model="LRA", seed=9))
    lra_risk = np.mean([risk_dir(ts, lra_predictor(), i) for i in range(1, 6)])
    inf_risk = np.mean([risk_dir(ts, informed_predictor(), i) for i in range(1, 6)])
    assert lra_risk < inf_risk


# ------------------------------------------------------ best fit labels


def test_best_fit_strategy_hm_data(hm_events):
    from flockfit.fit import fit_agent_models

    train = [e for e in hm_events[:6]]
    res = fit_agent_models(train, kappa_grid=((0.0, 0.0, 0.0),))
    test = hm_events[6:8]
    label, risks = best_fit_strategy(test, 2, res.models[2][0].w, res.network)
    assert label in ("OPT", "HM")
    assert abs(risks["OPT"] - risks["HM"]) < 1.0


def test_best_fit_strategy_lra_data(lra_events):
    from flockfit.fit import fit_agent_models

    res = fit_agent_models(lra_events[:6], kappa_grid=((0.0, 0.0, 0.0),))
    label, risks = best_fit_strategy(lra_events[6:8], 4, res.models[4][0].w,
                                     res.network)
    assert abs(risks["OPT"] - risks["LRA"]) <= 0.5
    assert label in ("OPT", "LRA")


def test_best_fit_strategy_constant_ties_to_opt():
    from flockfit.dirmath import unit_vec

    n, T = 6, 50
    pos = np.zeros((n, T + 1, 2))
    for t in range(T):
        pos[:, t + 1] = pos[:, t] + unit_vec(40.0)
    pos += np.random.default_rng(0).uniform(0, 10, (n, 1, 2))
    ts = TrajectorySet(pos, np.full((n, T), 40.0), frozenset({0}), None)
    net = ProbFollowNetwork(6, {(i, 0): 1.0 for i in range(1, 6)})
    label, risks = best_fit_strategy(ts, 1, np.array([1 / 3, 1 / 3, 1 / 3]), net)
    assert label == "OPT"
    assert all(r == pytest.approx(0.0, abs=1e-9) for r in risks.values())


# ------------------------------------------------------ cross validation


def test_cross_validate_hm_ordering(cv_reports):
    risks = cv_reports["HM"].mean_risks
    assert risks["OPT"] <= risks["LRA"]
    assert risks["OPT"] <= risks["AR"]


def test_cross_validate_degenerate_two_identical_folds():
    a = simulate(SimSpec(model="HM", rho=1.0, seed=77))
    b = simulate(SimSpec(model="HM", rho=1.0, seed=77))
    rep = cross_validate([a, b], folds=2, seed=0)
    f0, f1 = rep.provenance["fold_details"]
    for k in f0["mean_risks"]:
        assert f0["mean_risks"][k] == pytest.approx(f1["mean_risks"][k], abs=1e-12)


def test_cross_validate_rejects_inconsistent_agents(lra_events):
    odd = simulate(SimSpec(model="LRA", seed=3, n_agents=20))
    odd.provenance = {"agent_ids": list(range(2, 22))}
    fixed = []
    for e in lra_events[:3]:
        t = TrajectorySet(e.positions, e.directions, e.informed,
                          {"agent_ids": list(range(1, 21))})
        fixed.append(t)
    with pytest.raises(InconsistentAgents):
        cross_validate(fixed + [odd], folds=2, seed=0)


def test_end_to_end_label_recovery(cv_reports):
    """Fitting on pure-strategy data recovers that strategy's label for
    nearly all uninformed agents; mixed-population data recovers each
    group's strategy."""
    hm_labels = cv_reports["HM"].labels[1:]
    assert sum(l == "HM" for l in hm_labels) / len(hm_labels) >= 0.95
    lra_labels = cv_reports["LRA"].labels[1:]
    assert sum(l == "LRA" for l in lra_labels) / len(lra_labels) >= 0.95
    both = cv_reports["HM_AND_LRA"].labels
    assert sum(l == "HM" for l in both[1:10]) / 9 >= 0.9
    assert sum(l == "LRA" for l in both[10:]) / 10 >= 0.9


def test_cross_validate_opt_dominance(cv_reports):
    """The fitted mixture never loses badly to the best pure strategy."""
    for model, rep in cv_reports.items():
        r = rep.mean_risks
        assert r["OPT"] <= min(r["HM"], r["LRA"], r["AR"]) + 2.0, model


def test_cross_validate_reports_are_finite(cv_reports):
    for rep in cv_reports.values():
        for v in rep.mean_risks.values():
            assert np.isfinite(v) and 0.0 <= v <= 180.0
        assert np.all(np.isfinite(rep.mean_w))
        assert np.all(rep.mean_w >= -1e-9) and np.all(rep.mean_w <= 1 + 1e-9)


# -------------------------------------------------------- classification


def test_classify_separable_features_perfect():
    rng = np.random.default_rng(1)
    feats, labels = [], []
    centers = {"HM": [0.9, 0.05, 0.05], "LRA": [0.05, 0.9, 0.05],
               "RANDOM": [0.2, 0.4, 0.4]}
    for lab, c in centers.items():
        for _ in range(30):
            feats.append(np.asarray(c))
            labels.append(lab)
    labeled = [(None, lab) for lab in labels]
    rep = classify_datasets(labeled, folds=5, seed=0,
                            features=np.stack(feats))
    for cls in rep.classes:
        assert rep.per_class[cls]["f1"] == pytest.approx(1.0)


def test_classify_confusion_row_sums():
    rng = np.random.default_rng(2)
    feats = rng.uniform(0, 1, (40, 3))
    labels = ["HM"] * 20 + ["LRA"] * 20
    rep = classify_datasets([(None, l) for l in labels], folds=4, seed=0,
                            features=feats)
    sums = rep.confusion.sum(axis=1)
    for k, cls in enumerate(rep.classes):
        assert sums[k] == labels.count(cls)


def test_classify_single_class_rejected():
    feats = np.zeros((10, 3))
    with pytest.raises(SingleClass):
        classify_datasets([(None, "HM")] * 10, folds=2, seed=0, features=feats)


def test_classify_metrics_match_confusion_identities():
    rng = np.random.default_rng(3)
    feats = np.concatenate(
        [rng.normal(0.2, 0.2, (25, 3)), rng.normal(0.8, 0.2, (25, 3))]
    )
    labels = ["HM"] * 25 + ["LRA"] * 25
    rep = classify_datasets([(None, l) for l in labels], folds=5, seed=1,
                            features=feats)
    C = rep.confusion
    for k, cls in enumerate(rep.classes):
        tp = C[k, k]
        fp = C[:, k].sum() - tp
        fn = C[k, :].sum() - tp
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        assert rep.per_class[cls]["precision"] == pytest.approx(prec)
        assert rep.per_class[cls]["recall"] == pytest.approx(rec)
        assert rep.per_class[cls]["f1"] == pytest.approx(f1)


def test_dataset_features_on_lra_event(lra_events):
    feat = dataset_features(lra_events[0])
    assert feat[1] > 0.8  # neighbor-agreement weight dominates the median


def test_forest_is_deterministic():
    rng = np.random.default_rng(4)
    X = rng.uniform(0, 1, (60, 3))
    y = (X[:, 0] > 0.5).astype(int)
    p1 = RandomForest(seed=9).fit(X, y).predict(X)
    p2 = RandomForest(seed=9).fit(X, y).predict(X)
    assert np.array_equal(p1, p2)
    assert (p1 == y).mean() > 0.9
