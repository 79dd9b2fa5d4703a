"""Streaming earth-mover distance estimation on the integer grid."""

from . import errors
from .coreset import CoresetConfig, ReduceRecord, StreamingCoreset, reduce_bucket
from .crossing_graph import (
    CrossingEdge,
    CrossingGraph,
    avoids_short_crossings,
    build_crossing_graph,
    decomposition_respects_hop_bound,
    degree_imbalance,
    no_long_edge_cycle,
    path_decompose,
    path_decompose_full,
    short_edge_threshold,
)
from .estimators import (
    CombinedEstimator,
    EstimateReport,
    MultigridEstimator,
    NestedGridEstimator,
    combined_estimate,
)
from .exact import (
    Matching,
    MatchingEdge,
    brute_force_emd,
    exact_capacitated_kmedian,
    exact_emd,
    exact_kmedian,
    l1_distance,
    l2_distance,
)
from .generators import InstanceSpec, generate_instance, instance_stream, with_cancelling_pairs
from .geometry import (
    CellId,
    GridSpec,
    Point,
    SparseCellCounts,
    StreamUpdate,
    WeightedPointSet,
    apply_update,
    cell_counts_of_set,
    cell_of,
    edge_crosses,
    random_grid,
)
from .runner import RunConfig, capacitated_search, run
from .sketches import L0Sketch, L1Sketch, l0_capacity, l1_rows
from .stream_io import parse_stream, parse_stream_lines, write_stream
from .verify import verify_claims

__version__ = "0.1.0"

__all__ = [
    "CellId",
    "CombinedEstimator",
    "CoresetConfig",
    "CrossingEdge",
    "CrossingGraph",
    "EstimateReport",
    "GridSpec",
    "InstanceSpec",
    "L0Sketch",
    "L1Sketch",
    "Matching",
    "MatchingEdge",
    "MultigridEstimator",
    "NestedGridEstimator",
    "Point",
    "ReduceRecord",
    "RunConfig",
    "SparseCellCounts",
    "StreamUpdate",
    "StreamingCoreset",
    "WeightedPointSet",
    "apply_update",
    "avoids_short_crossings",
    "brute_force_emd",
    "build_crossing_graph",
    "capacitated_search",
    "cell_counts_of_set",
    "cell_of",
    "combined_estimate",
    "decomposition_respects_hop_bound",
    "degree_imbalance",
    "edge_crosses",
    "errors",
    "exact_capacitated_kmedian",
    "exact_emd",
    "exact_kmedian",
    "generate_instance",
    "instance_stream",
    "l0_capacity",
    "l1_distance",
    "l1_rows",
    "l2_distance",
    "no_long_edge_cycle",
    "parse_stream",
    "parse_stream_lines",
    "path_decompose",
    "path_decompose_full",
    "random_grid",
    "reduce_bucket",
    "run",
    "short_edge_threshold",
    "verify_claims",
    "with_cancelling_pairs",
    "write_stream",
]
