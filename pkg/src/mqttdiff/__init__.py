"""Learning-based differential testing of MQTT brokers.

Infers Mealy-machine models of broker implementations by active automata
learning, cross-checks the learned models pairwise for observation
equivalence, and flags counterexample traces as suspected bugs.
"""

from .automata import (AlphabetError, MealyMachine, ModelFormatError, Trace,
                       deserialize, load_model, save_model, serialize, to_dot)
from .crosscheck import (ConfirmationReport, Diff, FilterPattern,
                         apply_filters, confirm, cross_check,
                         format_diff_report, parse_diff_report,
                         parse_filter_file)
from .endpoints import open_endpoint
from .learner import (CachedSUL, LearnLimits, LearnResult, LearnStatistics,
                      NondeterminismError, ObservationTable,
                      SpuriousCounterexampleError, learn)
from .oracles import (RandomWalkConfig, RandomWalkOracle, WMethodOracle,
                      random_walk, w_method, w_method_suite)
from .sul import (MachineSUL, Mapper, MapperConfig, MapperEndpoint,
                  SULEndpoint, TransportError, abstract_output, run_query)

__version__ = "0.1.0"

__all__ = [
    "AlphabetError", "MealyMachine", "ModelFormatError", "Trace",
    "deserialize", "load_model", "save_model", "serialize", "to_dot",
    "ConfirmationReport", "Diff", "FilterPattern", "apply_filters", "confirm",
    "cross_check", "format_diff_report", "parse_diff_report",
    "parse_filter_file",
    "open_endpoint",
    "CachedSUL", "LearnLimits", "LearnResult", "LearnStatistics",
    "NondeterminismError", "ObservationTable", "SpuriousCounterexampleError",
    "learn",
    "RandomWalkConfig", "RandomWalkOracle", "WMethodOracle", "random_walk",
    "w_method", "w_method_suite",
    "MachineSUL", "Mapper", "MapperConfig", "MapperEndpoint", "SULEndpoint",
    "TransportError", "abstract_output", "run_query",
    "__version__",
]
