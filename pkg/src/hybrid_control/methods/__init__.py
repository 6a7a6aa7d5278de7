from .borrowing import (
    DawWeights,
    InfiniteOdds,
    analyze_daw,
    analyze_full_pooling,
    analyze_lin,
    analyze_npp,
    analyze_power_prior,
    analyze_trial_only,
    compute_daw_weights,
    daw_weights_from_scores,
    fit_on_trial_score,
    weighted_analysis,
)
from .matching import MatchResult, match_optimal
from .npp import ALPHA_GRID, DegenerateProfile, NppProfile, estimate_npp_alpha

__all__ = [
    "ALPHA_GRID",
    "DawWeights",
    "DegenerateProfile",
    "InfiniteOdds",
    "MatchResult",
    "NppProfile",
    "analyze_daw",
    "analyze_full_pooling",
    "analyze_lin",
    "analyze_npp",
    "analyze_power_prior",
    "analyze_trial_only",
    "compute_daw_weights",
    "daw_weights_from_scores",
    "estimate_npp_alpha",
    "fit_on_trial_score",
    "match_optimal",
    "weighted_analysis",
]
