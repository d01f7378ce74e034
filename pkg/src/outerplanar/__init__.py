"""Random outerplanar maps: generating series, exact samplers, metric tools and experiments."""

from .experiments import ExperimentConfig, load_config, run_experiment
from .metrics import diameter, distortion, giant_statistics, penalty
from .oracle import enumerate_dissections, enumerate_maps
from .samplers import (
    Rng,
    sample_dissection,
    sample_gw_tree_by_leaves,
    sample_gw_tree_by_vertices,
    sample_map,
    sample_map_leaf_coupling,
    sample_map_vertex_coupling,
)
from .series import (
    WeightModel,
    build_power_law_weights,
    build_series,
    phase_parameters,
    scaling_constants,
)
from .structures import Dissection, OuterplanarMap, PlaneTree, looptree, lukasiewicz

__all__ = [
    "Dissection", "ExperimentConfig", "OuterplanarMap", "PlaneTree", "Rng", "WeightModel",
    "build_power_law_weights", "build_series", "diameter", "distortion", "enumerate_dissections",
    "enumerate_maps", "giant_statistics", "load_config", "looptree", "lukasiewicz", "penalty",
    "phase_parameters", "run_experiment", "sample_dissection", "sample_gw_tree_by_leaves",
    "sample_gw_tree_by_vertices", "sample_map", "sample_map_leaf_coupling",
    "sample_map_vertex_coupling", "scaling_constants",
]
