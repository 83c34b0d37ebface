"""Time-rate regions of discrete memoryless networks with per-demand decoding deadlines.

The package expands a problem with deadlines into a sequence of phase
problems, bounds what each phase can carry with single-phase capacity
oracles, composes the phases into an inner bound on the achievable rates, and
checks the resulting coding schemes by Monte Carlo simulation on erasure
broadcast channels.
"""

from .errors import (ConstructionError, RateBudgetError, ResourceCapExceeded, SpecParseError, TimeRateError,
                     UnsupportedChannel, UnsupportedPhaseStructure, ValidationError)
from .expansion import (ExpandedProblem, PhaseProblem, SubMessage, build_index_set, canonical_embedding,
                        canonicalize_submessages, expand, phase_problems, rates_to_original)
from .infotheory import (blahut_arimoto_capacity, common_message_capacity, mutual_information,
                         static_broadcast_max_rate)
from .innerbound import (InnerBoundRegion, check_allocation, convexify, inner_bound_frontier,
                         max_weighted_rate)
from .model import Channel, NetworkProblem, TimeConstraints, time_partition, validate_problem
from .oracles import DegradedBroadcastOracle, MulticastOracle, OracleSettings, PointToPointOracle
from .specfile import load_spec, parse_spec

__version__ = "0.1.0"

__all__ = [
    "Channel", "ConstructionError", "DegradedBroadcastOracle", "ExpandedProblem", "InnerBoundRegion",
    "MulticastOracle", "NetworkProblem", "OracleSettings", "PhaseProblem", "PointToPointOracle",
    "RateBudgetError", "ResourceCapExceeded", "SpecParseError", "SubMessage", "TimeConstraints",
    "TimeRateError", "UnsupportedChannel", "UnsupportedPhaseStructure", "ValidationError",
    "blahut_arimoto_capacity", "build_index_set", "canonical_embedding", "canonicalize_submessages",
    "check_allocation", "common_message_capacity", "convexify", "expand", "inner_bound_frontier",
    "load_spec", "max_weighted_rate", "mutual_information", "parse_spec", "phase_problems",
    "rates_to_original", "static_broadcast_max_rate", "time_partition", "validate_problem",
]
