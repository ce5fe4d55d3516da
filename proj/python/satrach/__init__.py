"""Satellite random access toolkit.

Thin Python surface over the C++ core: Zadoff-Chu preamble correlation,
early collision classification, opportunistic Step-3 transmission
probabilities and the 4-step RACH protocol simulator.
"""

from ._core import (
    PrachConfig,
    SimConfig,
    SimMetrics,
    binomial_prior,
    cnn_param_count,
    cyclic_xcorr,
    estimate_active_users,
    gen_dataset,
    mlp_param_count,
    optimal_access_prob,
    posterior,
    run_scenario,
    shifted_preamble,
    success_probability,
    train_classifier,
    zc_root,
)

__all__ = [
    "PrachConfig",
    "SimConfig",
    "SimMetrics",
    "binomial_prior",
    "cnn_param_count",
    "cyclic_xcorr",
    "estimate_active_users",
    "gen_dataset",
    "mlp_param_count",
    "optimal_access_prob",
    "posterior",
    "run_scenario",
    "shifted_preamble",
    "success_probability",
    "train_classifier",
    "zc_root",
]
