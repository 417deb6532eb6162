"""Success probabilities of decoding (partial) unit memory codes.

``channel``  weight distributions, threshold probabilities, binomial tail bounds
``analytic`` closed-form block success, crossover point, parameter sweep
``sim``      candidate automaton, Monte-Carlo and exact enumeration
``codec``    Reed–Solomon based (P)UM codes over GF(2^m) with an erasure decoder
``cli``      command-line front end (``pumcodes``)
"""

from .analytic import (
    BlockSuccessResult,
    backward_chain_prob,
    backward_chain_prob_streaming,
    crossover_bound_ratios,
    crossover_point,
    forward_chain_prob,
    independent_block_success,
    parameter_sweep,
    pum_block_success,
    um_block_success,
)
from .channel import (
    DecodingRadii,
    ThresholdProbabilities,
    WeightDistribution,
    binomial_weight_distribution,
    tail_bound_lower,
    tail_bound_upper,
    tail_probability,
    threshold_probabilities,
)
from .sim import (
    candidate_automaton,
    enumerate_exact_profile,
    enumerate_exact_success,
    monte_carlo_success,
)

__version__ = "0.1.0"
