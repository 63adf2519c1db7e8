"""Geodesics, extremal curves and causal structure for metrics of low regularity.

Metrics are smooth on either side of a hypersurface and glued continuously
across it; geodesics are understood as Filippov solutions of the geodesic
equation.
"""

from .causal import (
    GridSpec,
    ReachabilitySet,
    causal_character,
    cone_sample,
    grid_reachability,
    hw_lorentzian_lengths,
    maximize_causal_bvp,
)
from .errors import *  # noqa: F401,F403
from .extremal import (
    BvpSolutionSet,
    Polyline,
    curve_length,
    dbr_residual,
    geodesic_bvp_shooting,
    minimize_bvp,
)
from .filippov import (
    PiecewiseField,
    Trajectory,
    classify_interface_hit,
    continue_trajectory,
    demo_field,
    filippov_hull,
    integrate_filippov,
    sliding_field,
)
from .geodesics import GeodesicRecord, hw_geodesic_family, shoot_geodesic, tangent_norm
from .metric_zoo import (
    PiecewiseMetric,
    bubble,
    christoffel,
    eval_metric,
    flat,
    from_descriptor,
    hw_lorentzian,
    hw_riemannian,
    lipschitz_toy,
)

__version__ = "0.1.0"
