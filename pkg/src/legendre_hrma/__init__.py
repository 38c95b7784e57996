"""Numerical Legendre transform solutions of the homogeneous real
Monge-Ampere Cauchy problem on toric data."""

from .convex_core import (
    DomainError,
    GapComponent,
    PLConvexFunction,
    SampledFunction,
    SubdifferentialInterval,
    conjugate,
    gap_components,
    gap_set,
    lower_convex_envelope,
    subdifferential,
)
from .intervals import IntervalUnion, SeparableGapSet, hausdorff_distance
from .mass import MassReport, SubgradientChord, SweptRegion, chords, mass_report, prop3_bound, swept_area
from .ray import (
    MetricProfile,
    RaySlice,
    SingularPointError,
    essential_smoothness_probe,
    metric_profile,
    ray_slice,
    regular_residual,
    time_derivative,
)
from .toric import (
    AxisSpec,
    LifespanResult,
    Polytope,
    ToricCauchyData,
    a_set,
    a_set_diagnostics,
    cauchy_from_kahler,
    convex_lifespan,
    fubini_study,
    guillemin_potential,
    interior_grid,
    p1xp1,
    u_s,
)

__version__ = "0.1.0"
