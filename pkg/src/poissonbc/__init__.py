"""Capacity regions, channel orderings and simulation for two-receiver Poisson channels."""

from poissonbc.capacity import (
    OrderingWarning,
    RatePoint,
    RegionBoundary,
    bc_region,
    dms_region,
    pp_capacity,
    wiretap_capacity,
)
from poissonbc.channel import ChannelParams, OrderingVerdict, capital_phi, classify_ordering, phi
from poissonbc.codingsim import ExperimentResult, make_thresholds, model_targets, run_experiment
from poissonbc.inference import (
    anticausal_posterior,
    causal_posterior,
    exact_block_mi,
    info_density,
    verify_csiszar_identity,
    verify_lln,
    verify_mc_inequality,
)
from poissonbc.process import (
    BlockInputModel,
    ChannelRealization,
    PointProcess,
    restrict_window,
    sample_realization,
    time_reverse,
)

__all__ = [
    "BlockInputModel",
    "ChannelParams",
    "ChannelRealization",
    "ExperimentResult",
    "OrderingVerdict",
    "OrderingWarning",
    "PointProcess",
    "RatePoint",
    "RegionBoundary",
    "anticausal_posterior",
    "bc_region",
    "capital_phi",
    "causal_posterior",
    "classify_ordering",
    "dms_region",
    "exact_block_mi",
    "info_density",
    "make_thresholds",
    "model_targets",
    "phi",
    "pp_capacity",
    "restrict_window",
    "run_experiment",
    "sample_realization",
    "time_reverse",
    "verify_csiszar_identity",
    "verify_lln",
    "verify_mc_inequality",
    "wiretap_capacity",
]

__version__ = "0.1.0"
