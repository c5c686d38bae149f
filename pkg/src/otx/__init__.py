"""
otx: entropic optimal transport on weighted graphs.

Sinkhorn needs products with ``K = exp(-D / eps)`` for the shortest-path
matrix ``D``. On graphs with small balanced separators these products can
be computed without ever forming ``D``, by recursing on a separator tree
(:func:`build_sgfi`, :func:`integrate`). The same solver runs against a
dense reference kernel and against cheap approximations for comparison.
"""

from .baselines import (DenseKernel, NystromKernel, ResourceError, SparseKernel, build_dense,
                        build_nystrom, build_sparse, greenkhorn_solve)
from .cross import CrossPlan, cross_brute_force, cross_compute
from .generators import (generate_dumbbell, generate_grid_surface, generate_path,
                         generate_random_tree, grid_side_for_size)
from .graph import (DistanceBlock, WeightedGraph, all_pairs_distances, dijkstra_sssp,
                    multi_source_distances, shortcut_subgraph)
from .io import ParseError, load_edge_list, load_mesh
from .kernels import (CostWeightedExponential, ExponentialKernel, KernelConfigError, PolynomialKernel,
                      RFFKernel, gaussian_rff)
from .measures import default_measures, geodesic_gaussian_mixture, load_measure, save_measure
from .separators import (Separation, SeparatorConfig, SeparatorModeError, find_separator,
                         planar_separator, subsample_separator, tree_centroid_separator)
from .sgfi import SgfiConfig, SgfiNode, UnsupportedKernelError, build_sgfi, integrate, integrate_weighted
from .sinkhorn import (NumericalUnderflowError, SgfiOperator, SinkhornState, TransportPlanHandle,
                       UnsupportedOperationError, plan_query, plan_query_transpose, sinkhorn_solve,
                       transport_cost)

__version__ = "0.1.0"
