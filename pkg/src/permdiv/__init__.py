"""Divisor processes of random permutations and their limit laws."""

__version__ = "0.1.0"

from .cycletype import (
    CapacityError,
    CycleType,
    cycle_type_probability,
    enumerate_cycle_types,
    log_cycle_type_probability,
    restricted_cycle_count_stats,
    sample_ewens_cycle_type,
    sample_uniform_cycle_type,
)
from .divproc import (
    DivisorSizeDistribution,
    Trajectory,
    Weight,
    binomial_convolution,
    divisor_char_fn,
    divisor_size_distribution,
    modulus_of_continuity,
    total_weight,
    trajectory_eval,
)
from .rng import RngStream
