"""Discrete optimal transport with transport classes.

Exact and floating-point solvers for the Kantorovich and Monge problems
between finitely supported measures, disintegration of plans into
conditional-measure maps, and transport problems constrained to a class of
plans sharing the push-forward of their disintegration map.
"""

from .errors import *  # noqa: F401,F403
from .measure import (
    CostSpec,
    DiscreteMeasure,
    Euclidean,
    ExplicitMatrix,
    InnerProduct,
    Separable,
    SquaredEuclidean,
    barycenter,
    cost_matrix,
    dirac,
    eval_cost,
    make_measure,
    pushforward_by_index_map,
)
from .solver import (
    LPResult,
    SolverSolution,
    Status,
    TransportationInstance,
    solve_lp_dense,
    solve_transportation,
)
from .kantorovich import (
    Potential,
    TransportPlan,
    c_superdifferential,
    c_transform,
    check_cyclical_monotonicity,
    check_twist,
    dual_check_w1,
    lipschitz_potential,
    make_plan,
    map_plan,
    product_plan,
    solve_mk,
    solve_monge_maps,
    wasserstein,
)
from .meta import MetaMeasure, generalized_barycenter, make_meta, meta_wasserstein
from .disintegration import (
    DisintegrationMap,
    classes_equal,
    disintegrate,
    map_from_class_plan,
    pushforward_meta,
    recombine,
    second_marginal,
)
from .transport_class import (
    check_class_constraint,
    class_of_map,
    compare_with_kantorovich,
    diagnose_existence,
    lifted_cost,
    solve_allocation,
    solve_class_problem,
)

__version__ = "0.1.0"
