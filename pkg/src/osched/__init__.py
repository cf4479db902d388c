"""Threshold-based downlink multicast scheduling over i.i.d. Rayleigh fading.

Analytic throughput expressions, a Lambert-W closed form for the optimal
threshold quantile, and a seeded Monte Carlo engine for five schedulers
(unicast, multicast, median-user, median-threshold, optimal-threshold).
"""

from osched.analytics import (
    RatePrediction,
    lower_bound_rate,
    median_user_avg_goodput,
    multicast_avg_goodput,
    optimal_p,
    predict,
    threshold_avg_goodput,
    threshold_avg_tx_rate,
    unicast_avg_rate,
)
from osched.channel import (
    AvgSnr,
    SlotRealization,
    make_rng,
    quantile,
    sample_slot,
    snr_cdf,
    snr_pdf,
)
from osched.errors import DomainError, InvalidParameterError, NumericFailureError
from osched.numerics import (
    QuadratureSpec,
    binomial_pmf,
    grid_argmax,
    integrate_interval,
    integrate_semi_infinite,
    lambert_w0,
)
from osched.schedulers import (
    Policy,
    SlotOutcome,
    resolve_threshold,
    schedule_batch,
    schedule_slot,
    shannon_rate,
)
from osched.sim import SimConfig, SimResult, SweepPoint, derive_seed, run_sim, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AvgSnr",
    "DomainError",
    "InvalidParameterError",
    "NumericFailureError",
    "Policy",
    "QuadratureSpec",
    "RatePrediction",
    "SimConfig",
    "SimResult",
    "SlotOutcome",
    "SlotRealization",
    "SweepPoint",
    "binomial_pmf",
    "derive_seed",
    "grid_argmax",
    "integrate_interval",
    "integrate_semi_infinite",
    "lambert_w0",
    "lower_bound_rate",
    "make_rng",
    "median_user_avg_goodput",
    "multicast_avg_goodput",
    "optimal_p",
    "predict",
    "quantile",
    "resolve_threshold",
    "run_sim",
    "run_sweep",
    "sample_slot",
    "schedule_batch",
    "schedule_slot",
    "shannon_rate",
    "snr_cdf",
    "snr_pdf",
    "threshold_avg_goodput",
    "threshold_avg_tx_rate",
    "unicast_avg_rate",
]
