"""Shortcut-edge pruning for nearest-neighbor graphs with Ollivier-Ricci curvature."""
__version__ = "0.1.0"

from .curvature import CurvatureMap, NeighborMeasure, orc_all, orc_edge, wasserstein1
from .errors import InvalidConfig, InvalidLabels, LabelingFailure, OrcManlError, UnsupportedManifold
from .evaluation import (EvalReport, SweepTable, adjusted_rand_index, mle_intrinsic_dimension,
                         positive_orc_sweep, pruning_report, sigma_convergence_sweep)
from .graph import NeighborGraph, build_eps_graph, build_knn_graph, connected_components
from .prune import (EpsPolicy, PruneConfig, PruneResult, bisection_prune, density_prune,
                    distance_prune, mst_prune, orc_only_prune, orcmanl_prune)
from .synth import (GeodesicReference, ManifoldSpec, NoiseModel, PointCloud, dense_reference,
                    label_edges, sample_manifold)
