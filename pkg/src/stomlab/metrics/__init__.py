"""Distances used to state convergence: sets, measures, paths and spaces."""

from .gh import GHBound, gh_upper_bound, glue
from .paths import SkorohodResult, l0_distance, skorohod_distance, upc_distance
from .prohorov import prohorov_atoms, prohorov_distance, stom_distance, vague_distance
from .sets import fell_distance, hatc_graph_distance, hausdorff_distance

__all__ = [
    "GHBound", "SkorohodResult", "fell_distance", "gh_upper_bound", "glue",
    "hatc_graph_distance", "hausdorff_distance", "l0_distance", "prohorov_atoms",
    "prohorov_distance", "skorohod_distance", "stom_distance", "upc_distance",
    "vague_distance",
]
