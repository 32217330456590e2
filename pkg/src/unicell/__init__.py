"""Uniform random unicellular maps of high genus: samplers built on the
signed odd-cycle permutation correspondence, quotient-graph metrics,
exploration processes and exhaustive small-case oracles."""

from .core import (CPermutation, ExplorationTrace, MarkedTree, OddComposition,
                   QuotientGraph, RootedPlaneTree, canonical_numbering,
                   genus_of_cpermutation)
from .quotient import (MetricReport, check_condition_A, check_condition_B,
                       diameter, glue, injectivity_radius, max_ball_volume,
                       metric_report, typical_distance, UNBOUNDED)
from .sample import (OffspringLaw, SampleError, acceptance_rate_prediction,
                     sample_c_permutation, sample_marking, sample_odd_composition,
                     sample_plane_tree, sample_unicellular_graph,
                     solve_offspring_parameter)

__version__ = "0.1.0"

__all__ = [
    "CPermutation", "ExplorationTrace", "MarkedTree", "OddComposition",
    "QuotientGraph", "RootedPlaneTree", "canonical_numbering",
    "genus_of_cpermutation", "MetricReport", "check_condition_A",
    "check_condition_B", "diameter", "glue", "injectivity_radius",
    "max_ball_volume", "metric_report", "typical_distance", "UNBOUNDED",
    "OffspringLaw", "SampleError", "acceptance_rate_prediction",
    "sample_c_permutation", "sample_marking", "sample_odd_composition",
    "sample_plane_tree", "sample_unicellular_graph", "solve_offspring_parameter",
    "__version__",
]
