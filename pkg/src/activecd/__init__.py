"""Semi-supervised and active community detection on stochastic block models.

Maximum-likelihood labeling through a label-constrained SDP relaxation,
rounded onto a regular simplex, with an expected-model-change active
learner on top.
"""
from .active_learning import (
    ActiveConfig,
    ModelMatrix,
    QueryLog,
    accuracy,
    active_loop,
    anchor_select,
    memc_scores,
    memc_select,
    model_phi,
    random_baseline_loop,
    relax,
    semi_supervised,
)
from .graph_model import (
    Graph,
    GroundTruth,
    ModifiedAdjacency,
    SbmParams,
    build_modified_adjacency,
    estimate_params,
    matvec,
    read_edge_list,
    sbm_sample,
    write_edge_list,
)
from .likelihood import (
    LabelDistribution,
    RatioCertificate,
    approx_ratio_certificate,
    brute_force_ml,
    brute_force_posterior,
    conditional_distribution,
    labeling_score,
    log_likelihood_score,
)
from .sdp_solver import SolveResult, SolverConfig, VectorLabeling, extract_solution, solve_sdp, trace_score
from .simplex import DiscreteLabeling, SimplexBasis, best_fit_simplex, canonical_simplex, round_labeling

__version__ = "0.1.0"
