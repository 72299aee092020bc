"""Multi-class granular approximation of labeled data over fuzzy relations.

Given instances with numeric attributes, crisp class labels and a fuzzy
relation expressing similarity or dominance, the library computes the
granularly representable membership assignment closest to the observed
labels, verifies the result (feasibility and tightness certificates), and
exports the induced granule geometry.  The high-level entry points are
:class:`GranularApproximator` (scikit-learn style) and the ``granapprox``
command-line tool.
"""

from .connectives import (
    IDENTITY,
    SQRT,
    SQUARE,
    Isomorphism,
    LawReport,
    ResidualTriplet,
    TNormKind,
    coherence_violation,
    named_isomorphism,
    verify_laws,
)
from .estimator import GranularApproximator
from .geometry import GranuleGeometry, export_geometry, granule_point_membership
from .granules import (
    Granule,
    are_t_disjoint,
    complement,
    granule_membership,
    is_adjacent,
    is_granularly_representable,
    level_set,
    lower_approximation,
    upper_approximation,
)
from .losses import LossFunction
from .pipeline import (
    RelabelReport,
    RunConfig,
    run_approximation,
    suggest_relabels,
)
from .dataset import LabeledDataset
from .relations import (
    AttributeTable,
    RelationMatrix,
    check_properties,
    euclidean_metric,
    mahalanobis_metric,
    metric_relation,
    triangular_dominance,
    triangular_similarity,
)
from .solver import (
    ApproximationResult,
    BoundMatrix,
    DecisionRelation,
    SolverError,
    build_bounds,
    bruteforce_general,
    feasible_solution,
    solve_binary,
    solve_bruteforce,
    solve_lp,
    solve_qp,
    verify_constraints,
    verify_tightness,
)
from .tolerances import EPS_FEAS, EPS_ISO, EPS_KKT, EPS_LAW, EPS_REL, Tolerances

__version__ = "0.1.0"
