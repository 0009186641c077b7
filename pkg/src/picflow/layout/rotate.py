"""Orientation search: retry place-and-route over all 4^N rotations."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

from ..dsl import PicDesign
from ..pdk import PdkRegistry
from ..schematic import SchematicGraph
from .place import Placement, place
from .route import RoutedLayout, RoutingFailure, route
from .rules import DesignRules

_ORIENTATIONS = ("N", "E", "S", "W")


class Exhausted(Exception):
    """No orientation assignment routed within the attempt/time budget."""

    def __init__(self, attempts: int, elapsed: float):
        self.attempts = attempts
        self.elapsed = elapsed
        super().__init__(
            f"orientation search exhausted after {attempts} assignments "
            f"({elapsed:.1f} s)"
        )


@dataclass(frozen=True)
class SearchResult:
    layout: RoutedLayout
    orientations: dict[str, str]
    attempts: int


def rotation_search(
    design: PicDesign,
    graph: SchematicGraph,
    registry: PdkRegistry,
    rules: DesignRules,
    budget_seconds: float = 120.0,
) -> SearchResult:
    """Enumerate orientation assignments lexicographically; first success wins.

    The identity assignment (all N) comes first, so an already-routable
    baseline returns after a single attempt.
    """
    ids = [n.id for n in graph.nodes]
    start = time.monotonic()
    attempts = 0
    for combo in itertools.product(_ORIENTATIONS, repeat=len(ids)):
        if time.monotonic() - start > budget_seconds:
            raise Exhausted(attempts, time.monotonic() - start)
        attempts += 1
        orientations = dict(zip(ids, combo))
        try:
            placement = place(design, graph, registry, rules, orientations)
            layout = route(design, placement, registry, rules)
        except (RoutingFailure, AssertionError):
            continue
        return SearchResult(layout, orientations, attempts)
    raise Exhausted(attempts, time.monotonic() - start)
