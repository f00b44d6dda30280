"""Plan minimum-cost tree cable networks under per-pair length and hop limits."""

from .netmodel import (
    Constraint,
    ConstraintSet,
    Network,
    SpanningTree,
    check_constraints,
    tree_cost,
    tree_path,
)
from .solver import Budget, SolveOutcome, kruskal_bound, solve_exact
from .terrain import EARTH_RADIUS_KM, GeoPoint, TerrainGrid, great_circle_km, load_grid

__all__ = [
    "Budget",
    "Constraint",
    "ConstraintSet",
    "EARTH_RADIUS_KM",
    "GeoPoint",
    "Network",
    "SolveOutcome",
    "SpanningTree",
    "TerrainGrid",
    "check_constraints",
    "great_circle_km",
    "kruskal_bound",
    "load_grid",
    "solve_exact",
    "tree_cost",
    "tree_path",
]
