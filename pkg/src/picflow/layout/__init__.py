from .build import geometry_json, to_library
from .drc import DrcReport, DrcViolation, run_drc
from .place import ORIENTATION_DEG, PlacedInstance, Placement, place, port_positions
from .rotate import Exhausted, SearchResult, rotation_search
from .route import Route, RoutedLayout, RoutingFailure, route
from .rules import DesignRules, default_rules_path, load_rules

__all__ = [
    "DesignRules",
    "DrcReport",
    "DrcViolation",
    "Exhausted",
    "ORIENTATION_DEG",
    "PlacedInstance",
    "Placement",
    "Route",
    "RoutedLayout",
    "RoutingFailure",
    "SearchResult",
    "default_rules_path",
    "geometry_json",
    "load_rules",
    "place",
    "port_positions",
    "rotation_search",
    "route",
    "run_drc",
    "to_library",
]
