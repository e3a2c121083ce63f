"""Explainable online dispatch planning for paratransit.

An anytime tree-search planner over an insertion-based dial-a-ride MDP, plus
a temporal-logic layer that turns dispatcher queries into formulas, checks
them against the search tree, quantifies violations, and renders the findings
as plain-language explanations.
"""

from .model import (
    Action,
    ConstraintViolation,
    Location,
    ModelConfig,
    Request,
    RequestStatus,
    RouteStop,
    State,
    StopKind,
    Vehicle,
)

__all__ = [
    "Action",
    "ConstraintViolation",
    "Location",
    "ModelConfig",
    "Request",
    "RequestStatus",
    "RouteStop",
    "State",
    "StopKind",
    "Vehicle",
]

__version__ = "0.1.0"
