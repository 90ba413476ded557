"""ANN-type quadratic metric inequalities on finite semimetric spaces."""

from .barycenter import BarycenterWitness, barycenter, pi_prop_slack, variance_identity_residual
from .inequalities import (
    AbPlan,
    AnnPlan,
    BoxtimesReport,
    InvalidPlanError,
    ab_gap,
    ab_to_pi,
    ann_gap,
    boxtimes_as_ann_plan,
    boxtimes_gap,
    boxtimes_min,
    check_boxtimes,
    coarsen,
    mediant,
)
from .lebedeva import (
    ConditionError,
    LebedevaInstance,
    build_instance,
    build_metric,
    compute_C,
    compute_c,
    compute_delta,
    compute_h_H,
    compute_theta,
    default_instance,
    f_inv,
    validate_conditions,
)
from .search import (
    Certificate,
    InnerMax,
    SearchConfig,
    SearchReport,
    TooManyPointsError,
    certify_embeddable_upto5,
    inner_max_pi,
    search_violation,
)
from .spaces import (
    PointCloud,
    QuadraticForm,
    SemimetricError,
    SemimetricSpace,
    check_triangle,
    evaluate_quadratic_form,
    from_points,
    validate_semimetric,
)

__all__ = [
    "AbPlan",
    "AnnPlan",
    "BarycenterWitness",
    "BoxtimesReport",
    "Certificate",
    "ConditionError",
    "InnerMax",
    "InvalidPlanError",
    "LebedevaInstance",
    "PointCloud",
    "QuadraticForm",
    "SearchConfig",
    "SearchReport",
    "SemimetricError",
    "SemimetricSpace",
    "TooManyPointsError",
    "ab_gap",
    "ab_to_pi",
    "ann_gap",
    "barycenter",
    "boxtimes_as_ann_plan",
    "boxtimes_gap",
    "boxtimes_min",
    "build_instance",
    "build_metric",
    "certify_embeddable_upto5",
    "check_boxtimes",
    "check_triangle",
    "coarsen",
    "compute_C",
    "compute_c",
    "compute_delta",
    "compute_h_H",
    "compute_theta",
    "default_instance",
    "evaluate_quadratic_form",
    "f_inv",
    "from_points",
    "inner_max_pi",
    "mediant",
    "pi_prop_slack",
    "search_violation",
    "validate_conditions",
    "validate_semimetric",
    "variance_identity_residual",
]
