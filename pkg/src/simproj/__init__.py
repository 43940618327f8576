"""Plan, estimate and draw agile / SIM software projects built from unit modules."""

from simproj.dsl import PlanDocument, parse_plan, serialize_plan
from simproj.estimator import Estimate, estimate, validate, what_if
from simproj.model import (
    Calendar,
    Duration,
    EstimateParams,
    ModuleKind,
    PlanGraph,
    PlanNode,
    Team,
    TimeUnit,
    build_graph,
    topological_order,
)

__version__ = "0.1.0"

__all__ = [
    "Calendar",
    "Duration",
    "Estimate",
    "EstimateParams",
    "ModuleKind",
    "PlanDocument",
    "PlanGraph",
    "PlanNode",
    "Team",
    "TimeUnit",
    "build_graph",
    "estimate",
    "parse_plan",
    "serialize_plan",
    "topological_order",
    "validate",
    "what_if",
]
