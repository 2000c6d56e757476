"""Simulate coordinated group movement and infer, from trajectory time
series, which following strategy each agent used."""

from .coordination import (
    CoordinationInterval,
    DynamicFollowNetwork,
    FollowResult,
    ProbFollowNetwork,
    aggregate_to_dag,
    build_dynamic_following_network,
    detect_coordination_intervals,
    find_initiators,
    following_relation,
    leadership_ranking,
    sim_foll,
)
from .dirmath import circular_mean, directions_from_positions, dist_dir, norm_deg
from .evaluate import (
    ClassificationReport,
    RiskReport,
    best_fit_strategy,
    classify_datasets,
    cross_validate,
    dataset_features,
    risk_dir,
)
from .fit import (
    FitResult,
    FittedModel,
    PredictionMatrix,
    build_prediction_matrix,
    fit_agent_models,
    label_strategy,
    select_agent_model,
    solve_support_qp,
)
from .simulate import (
    ConvergenceReport,
    SimSpec,
    TrajectorySet,
    check_convergence,
    compute_hm_bound,
    simulate,
)
from .strategies import (
    StrategyContext,
    delaunay_neighbors,
    predict_ar,
    predict_hm_fit,
    predict_hm_sim,
    predict_informed,
    predict_lra,
    predict_mix,
    realize_network,
)

__version__ = "0.1.0"
