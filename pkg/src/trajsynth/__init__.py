"""Trajectory query synthesis from labeled examples."""

from .trajectory import (
    Dataset, ObjectState, ParseError, SchemaError, State, Trajectory,
    form_pairs, load_dataset, save_dataset, split_dataset, subtrajectory,
)
from .predicates import (
    DataBounds, PredicateDef, Region, Registry, build_registry, dataset_bounds,
    load_regions, negated, sat, score,
)
from .query import (
    And, Dashv, Hole, Iterate, Neg, Or, Pred, PredHole, Query, Seq, Sketch,
    Star, StlAnd, StlAtom, StlNot, StlUntil, desugar, fill, holes, is_complete,
    is_sketch, substitute, translate_stl,
)
from .parser import QuerySyntaxError, format_query, parse_query
from .semantics import (
    Convention, DirectionFrame, check_sat, eval_matrix, eval_quant,
    eval_quant_fast, eval_sat, eval_sat_fast, eval_sat_sub, unit_frame,
)
from .search import (
    BOTTOM, TOP, Bottom, Box, BoundaryParam, Point, PruningPair, SearchState,
    Top, binary_search_pair, compute_pruning_pair, initial_box, midpoint,
    split_box, synthesize_parameters,
)
from .enumeration import (
    EnumConfig, SynthesisEntry, SynthesisResult, enumerate_sketches,
    synthesize_query,
)
from .active import (
    FixedLabelsOracle, GroundTruthOracle, InteractiveOracle, LoopConfig,
    LoopResult, OracleClosed, SeedingError, disagreement, evaluate_f1,
    run_loop, select_next,
)
from .synthetic import (
    GenerationError, SyntheticSpec, enum_config_for_scenario, generate_synthetic,
    reference_query, registry_for_scenario, scenario_convention, scenario_regions,
)

__version__ = "0.1.0"
