"""Geometric design-rule checks over a routed layout."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..dsl import PicDesign
from ..pdk import PdkRegistry
from .place import port_positions
from .route import RoutedLayout
from .rules import DesignRules


@dataclass(frozen=True)
class DrcViolation:
    rule: str  # min_width | min_spacing | min_bend_radius | open_port
    location: tuple[float, float]
    measured: float
    limit: float
    detail: str = ""


@dataclass(frozen=True)
class DrcReport:
    violations: tuple[DrcViolation, ...]

    @property
    def clean(self) -> bool:
        return not self.violations


def _seg_distance(a1, a2, b1, b2) -> float:
    def clamp(t):
        return max(0.0, min(1.0, t))

    def point_seg(p, s1, s2):
        dx, dy = s2[0] - s1[0], s2[1] - s1[1]
        l2 = dx * dx + dy * dy
        if l2 == 0:
            return math.hypot(p[0] - s1[0], p[1] - s1[1])
        t = clamp(((p[0] - s1[0]) * dx + (p[1] - s1[1]) * dy) / l2)
        return math.hypot(p[0] - (s1[0] + t * dx), p[1] - (s1[1] + t * dy))

    # proper intersection means zero distance
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1, d2 = orient(b1, b2, a1), orient(b1, b2, a2)
    d3, d4 = orient(a1, a2, b1), orient(a1, a2, b2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return 0.0
    return min(
        point_seg(a1, b1, b2),
        point_seg(a2, b1, b2),
        point_seg(b1, a1, a2),
        point_seg(b2, a1, a2),
    )


def _polyline_distance(pa, pb) -> tuple[float, tuple[float, float]]:
    best = math.inf
    where = pa[0]
    for i in range(len(pa) - 1):
        for j in range(len(pb) - 1):
            d = _seg_distance(pa[i], pa[i + 1], pb[j], pb[j + 1])
            if d < best:
                best = d
                where = pa[i]
    return best, where


def run_drc(
    design: PicDesign,
    layout: RoutedLayout,
    registry: PdkRegistry,
    rules: DesignRules,
) -> DrcReport:
    violations: list[DrcViolation] = []

    # minimum waveguide width on routes
    for r in layout.routes:
        if r.width < rules.min_width - 1e-12:
            violations.append(
                DrcViolation("min_width", r.points[0], r.width, rules.min_width, str(r.connection))
            )

    # minimum bend radius on route corners
    for r in layout.routes:
        for (x, y, radius) in r.corners:
            if radius < rules.min_bend_radius - 1e-12:
                violations.append(
                    DrcViolation(
                        "min_bend_radius", (x, y), radius, rules.min_bend_radius, str(r.connection)
                    )
                )

    # spacing between routes of different bundles
    margin = rules.min_spacing
    for i, ra in enumerate(layout.routes):
        for rb in layout.routes[i + 1 :]:
            if ra.bundle == rb.bundle:
                continue
            d, where = _polyline_distance(ra.points, rb.points)
            gap = d - (ra.width + rb.width) / 2
            if gap < margin - 1e-9:
                violations.append(
                    DrcViolation(
                        "min_spacing", where, max(gap, 0.0), margin,
                        f"{ra.connection} vs {rb.connection}",
                    )
                )

    # spacing between routes and unrelated placed cells
    for r in layout.routes:
        skip = {r.connection.a.instance, r.connection.b.instance}
        for iid, pl in sorted(layout.placement.instances.items()):
            if iid in skip:
                continue
            x0, y0, x1, y1 = pl.bbox
            box = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
            d, where = _polyline_distance(r.points, box)
            gap = d - r.width / 2
            if gap < margin - 1e-9:
                violations.append(
                    DrcViolation(
                        "min_spacing", where, max(gap, 0.0), margin,
                        f"{r.connection} vs cell {iid}",
                    )
                )

    # unconnected optical ports
    used = {str(ref) for c in design.connections for ref in c.endpoints()}
    for label, (x, y, _side) in sorted(port_positions(design, layout.placement, registry).items()):
        if label not in used:
            violations.append(DrcViolation("open_port", (x, y), 0.0, 0.0, label))

    return DrcReport(tuple(violations))
