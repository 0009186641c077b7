"""River router: bundles of parallel routes between placed cells.

Connections are grouped into bundles by the (instance, facing-side) pair at
each end. A bundle routes as order-preserving parallel paths — if the port
order at one end is inverted relative to the other, the bundle is unroutable
by definition and reported as such. Lateral jogs use S-bends built from two
opposed circular arcs of the rule-deck bend radius; right-angle corners
(U-turns, mixed-axis routes) are filleted with 90° arcs of the same radius.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable

from ..dsl import PicDesign, PortConnection
from ..pdk import PdkRegistry
from .place import Placement, port_positions
from .rules import DesignRules

_MAX_PERMUTE = 6  # track-order permutations tried exhaustively up to this size


class RoutingFailure(Exception):
    """A bundle could not be routed; ``reason`` names the first obstacle."""

    def __init__(self, reason: str, bundle: str, detail: str = ""):
        self.reason = reason  # 'order inversion' | 'clearance' | 'bend radius'
        self.bundle = bundle
        super().__init__(f"bundle {bundle}: {reason}" + (f" ({detail})" if detail else ""))


@dataclass(frozen=True)
class Route:
    connection: PortConnection
    points: tuple[tuple[float, float], ...]  # centreline incl. arc samples
    corners: tuple[tuple[float, float, float], ...]  # (x, y, radius)
    width: float
    layer: tuple[int, int]
    bundle: str
    u_turn: bool = False


@dataclass(frozen=True)
class RoutedLayout:
    placement: Placement
    routes: tuple[Route, ...]
    warnings: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# geometry helpers


def _seg_intersect(a1, a2, b1, b2) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    if max(a1[0], a2[0]) < min(b1[0], b2[0]) or max(b1[0], b2[0]) < min(a1[0], a2[0]):
        return False
    if max(a1[1], a2[1]) < min(b1[1], b2[1]) or max(b1[1], b2[1]) < min(a1[1], a2[1]):
        return False
    d1, d2 = orient(b1, b2, a1), orient(b1, b2, a2)
    d3, d4 = orient(a1, a2, b1), orient(a1, a2, b2)
    return d1 * d2 < 0 and d3 * d4 < 0


def _polyline_cross(pa, pb) -> bool:
    for i in range(len(pa) - 1):
        for j in range(len(pb) - 1):
            if _seg_intersect(pa[i], pa[i + 1], pb[j], pb[j + 1]):
                return True
    return False


def _arc(centre, radius, a_start, sweep, step_deg):
    n = max(2, int(math.ceil(abs(math.degrees(sweep)) / step_deg)))
    return [
        (
            centre[0] + radius * math.cos(a_start + sweep * k / n),
            centre[1] + radius * math.sin(a_start + sweep * k / n),
        )
        for k in range(n + 1)
    ]


def _fillet(points, radius, step_deg):
    """Replace interior right-angle corners with quarter-circle arcs."""
    if len(points) <= 2:
        return tuple(points), ()
    out = [points[0]]
    corners = []
    for i in range(1, len(points) - 1):
        p_prev, p, p_next = points[i - 1], points[i], points[i + 1]
        vin = (p[0] - p_prev[0], p[1] - p_prev[1])
        vout = (p_next[0] - p[0], p_next[1] - p[1])
        lin, lout = math.hypot(*vin), math.hypot(*vout)
        uin = (vin[0] / lin, vin[1] / lin)
        uout = (vout[0] / lout, vout[1] / lout)
        start = (p[0] - uin[0] * radius, p[1] - uin[1] * radius)
        centre = (start[0] + uout[0] * radius, start[1] + uout[1] * radius)
        a0 = math.atan2(start[1] - centre[1], start[0] - centre[0])
        cross = uin[0] * uout[1] - uin[1] * uout[0]
        sweep = math.pi / 2 if cross > 0 else -math.pi / 2
        out.extend(_arc(centre, radius, a0, sweep, step_deg))
        corners.append((p[0], p[1], radius))
    out.append(points[-1])
    return tuple(out), tuple(corners)


_DIRS = {"east": (1, 0), "west": (-1, 0), "north": (0, 1), "south": (0, -1)}
_HORIZ = {"east", "west"}


# ---------------------------------------------------------------------------
# candidate construction


@dataclass
class _Endpoint:
    label: str
    pos: tuple[float, float]
    side: str


@dataclass
class _Candidate:
    waypoints: list[tuple[float, float]]  # coarse polyline for checks
    points: tuple[tuple[float, float], ...]  # final sampled centreline
    corners: tuple[tuple[float, float, float], ...]


class _Reject(Exception):
    def __init__(self, reason: str, detail: str):
        self.reason = reason
        self.detail = detail


def _bundle_key(a: _Endpoint, b: _Endpoint) -> tuple:
    ka = (a.label.split(":")[0], a.side)
    kb = (b.label.split(":")[0], b.side)
    return tuple(sorted((ka, kb)))


def _is_aligned(a: _Endpoint, b: _Endpoint) -> bool:
    """True when the connection is a straight shot needing no jog."""
    if a.side in _HORIZ and b.side in _HORIZ and a.side != b.side:
        return abs(a.pos[1] - b.pos[1]) < 1e-9
    if a.side not in _HORIZ and b.side not in _HORIZ and a.side != b.side:
        return abs(a.pos[0] - b.pos[0]) < 1e-9
    return False


def _swap(p):
    return (p[1], p[0])


def _sbend(pa, pb, track, r, step_deg, conn):
    """Opposing horizontal faces with a lateral offset: straight, arc,
    optional straight, counter-arc, straight. ``track`` is the jog midline."""
    (xa, ya), (xb, yb) = pa, pb
    dy = yb - ya
    sgn = 1.0 if dy > 0 else -1.0
    ady = abs(dy)
    if ady >= 2 * r:
        theta = math.pi / 2
        straight = ady - 2 * r
    else:
        theta = math.acos(1 - ady / (2 * r))
        straight = 0.0
    run = 2 * r * math.sin(theta)
    x1 = track - run / 2
    x2 = track + run / 2
    if x1 < xa - 1e-9 or x2 > xb + 1e-9:
        raise _Reject("bend radius", f"{conn}: jog needs {run:.2f} um of run")
    mid = (track, (ya + yb) / 2)
    arc1 = _arc((x1, ya + sgn * r), r, -sgn * math.pi / 2, sgn * theta, step_deg)
    # the second arc is the first rotated 180 degrees about the jog midpoint
    arc2 = [(2 * mid[0] - x, 2 * mid[1] - y) for x, y in reversed(arc1)]
    pts: list[tuple[float, float]] = [(xa, ya)]
    pts.extend(arc1)
    pts.extend(arc2)
    pts.append((xb, yb))
    way = [(xa, ya), (x1, ya), (x2, yb), (xb, yb)]
    corners = ((x1, ya, r), (x2, yb, r))
    dedup = [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]
    return _Candidate([p for i, p in enumerate(way) if i == 0 or p != way[i - 1]], tuple(dedup), corners)


def _uturn(pa, pb, track, r, step_deg, conn):
    (xa, ya), (xb, yb) = pa, pb
    if abs(yb - ya) < 2 * r - 1e-9:
        raise _Reject("bend radius", f"{conn}: U-turn legs closer than {2 * r:.1f} um")
    way = [(xa, ya), (track, ya), (track, yb), (xb, yb)]
    way = [p for i, p in enumerate(way) if i == 0 or p != way[i - 1]]
    pts, corners = _fillet(way, r, step_deg)
    return _Candidate(way, pts, corners)


def _corner(pa, pb, corner, r, step_deg, conn):
    legs = (
        math.hypot(corner[0] - pa[0], corner[1] - pa[1]),
        math.hypot(pb[0] - corner[0], pb[1] - corner[1]),
    )
    if min(legs) < r - 1e-9:
        raise _Reject("bend radius", f"{conn}: corner leg shorter than {r} um")
    way = [pa, corner, pb]
    pts, corners = _fillet(way, r, step_deg)
    return _Candidate(way, pts, corners)


def _candidate(ea: _Endpoint, eb: _Endpoint, track: float, rules: DesignRules, conn) -> _Candidate:
    r = rules.min_bend_radius
    step = rules.arc_step_deg
    sa, sb = ea.side, eb.side
    if sa in _HORIZ and sb in _HORIZ:
        if sa != sb:
            left, right = (ea, eb) if ea.pos[0] <= eb.pos[0] else (eb, ea)
            if left.side != "east" or right.side != "west":
                raise _Reject("clearance", f"{conn}: ports face away from each other")
            if _is_aligned(ea, eb):
                return _Candidate([left.pos, right.pos], (left.pos, right.pos), ())
            return _sbend(left.pos, right.pos, track, r, step, conn)
        return _uturn(ea.pos, eb.pos, track, r, step, conn)
    if sa not in _HORIZ and sb not in _HORIZ:
        if sa != sb:
            lo, hi = (ea, eb) if ea.pos[1] <= eb.pos[1] else (eb, ea)
            if lo.side != "north" or hi.side != "south":
                raise _Reject("clearance", f"{conn}: ports face away from each other")
            if _is_aligned(ea, eb):
                return _Candidate([lo.pos, hi.pos], (lo.pos, hi.pos), ())
            flipped = _sbend(_swap(lo.pos), _swap(hi.pos), track, r, step, conn)
            return _Candidate(
                [_swap(p) for p in flipped.waypoints],
                tuple(_swap(p) for p in flipped.points),
                tuple((y, x, rad) for x, y, rad in flipped.corners),
            )
        flipped = _uturn(_swap(ea.pos), _swap(eb.pos), track, r, step, conn)
        return _Candidate(
            [_swap(p) for p in flipped.waypoints],
            tuple(_swap(p) for p in flipped.points),
            tuple((y, x, rad) for x, y, rad in flipped.corners),
        )
    # mixed horizontal/vertical: single corner
    h, v = (ea, eb) if sa in _HORIZ else (eb, ea)
    corner = (v.pos[0], h.pos[1])
    dh, dv = _DIRS[h.side], _DIRS[v.side]
    if (corner[0] - h.pos[0]) * dh[0] <= 0 or (corner[1] - v.pos[1]) * dv[1] <= 0:
        raise _Reject("clearance", f"{conn}: ports face away from each other")
    return _corner(ea.pos, eb.pos, corner, r, step, conn)


# ---------------------------------------------------------------------------
# bundle routing


def _channel(conns, u_turn, horizontal, n_jog, rules: DesignRules, bundle_name):
    """Midline position of the bundle's jog channel and its slot direction."""
    r, pitch = rules.min_bend_radius, rules.bundle_pitch
    axis = 0 if horizontal else 1
    coords = [(c[1].pos[axis], c[1].side) for c in conns] + [
        (c[2].pos[axis], c[2].side) for c in conns
    ]
    if not u_turn:
        pos_side = "east" if horizontal else "north"
        neg_side = "west" if horizontal else "south"
        lo = max(v for v, s in coords if s == pos_side)
        hi = min(v for v, s in coords if s == neg_side)
        span = hi - lo
        need = (len(conns) - n_jog) * 0.0 + (2 * r + (n_jog - 1) * pitch if n_jog else 0.0)
        if span < need - 1e-9:
            raise RoutingFailure(
                "bend radius",
                bundle_name,
                f"channel span {span:.2f} um < required {need:.2f} um",
            )
        base = (lo + hi) / 2 - max(n_jog - 1, 0) * pitch / 2
        return base, 1.0
    side = conns[0][1].side
    sign = 1.0 if side in ("east", "north") else -1.0
    edge = max(v * sign for v, _ in coords)
    return sign * (edge + r + pitch), sign


def _route_bundle(conns, rules: DesignRules, obstacles, bundle_name):
    pitch = rules.bundle_pitch
    a0, b0 = conns[0][1], conns[0][2]
    u_turn = a0.side == b0.side
    same_axis = (a0.side in _HORIZ) == (b0.side in _HORIZ)
    n_jog = sum(1 for _, ea, eb in conns if not _is_aligned(ea, eb))

    # order-preservation check (river-router definition)
    if len(conns) > 1 and same_axis and not u_turn:
        axis = 1 if a0.side in _HORIZ else 0
        order_a = sorted(range(len(conns)), key=lambda i: -conns[i][1].pos[axis])
        order_b = sorted(range(len(conns)), key=lambda i: -conns[i][2].pos[axis])
        if order_a != order_b:
            raise RoutingFailure(
                "order inversion", bundle_name, "port orders differ between ends"
            )

    if same_axis:
        base, sign = _channel(conns, u_turn, a0.side in _HORIZ, n_jog, rules, bundle_name)
    else:
        base, sign = 0.0, 1.0

    n = len(conns)
    orders: Iterable[tuple[int, ...]]
    if n == 1:
        orders = [(0,)]
    elif n <= _MAX_PERMUTE:
        orders = itertools.permutations(range(n))
    else:
        orders = [tuple(range(n)), tuple(reversed(range(n)))]

    last_error = RoutingFailure("clearance", bundle_name, "no candidate geometry")
    for perm in orders:
        candidate: list[tuple[PortConnection, _Candidate]] = []
        ok = True
        slot = 0
        for idx in perm:
            conn, ea, eb = conns[idx]
            track = base + sign * slot * pitch
            if not _is_aligned(ea, eb):
                slot += 1
            try:
                cand = _candidate(ea, eb, track, rules, conn)
            except _Reject as rej:
                last_error = RoutingFailure(rej.reason, bundle_name, rej.detail)
                ok = False
                break
            candidate.append((conn, cand))
        if not ok:
            continue
        crossing = any(
            _polyline_cross(candidate[i][1].waypoints, candidate[j][1].waypoints)
            for i in range(len(candidate))
            for j in range(i + 1, len(candidate))
        )
        if crossing:
            last_error = RoutingFailure(
                "order inversion", bundle_name, "no non-crossing track assignment"
            )
            continue
        hit = _clearance_hit(candidate, obstacles, rules)
        if hit:
            last_error = RoutingFailure("clearance", bundle_name, hit)
            continue
        routes = [
            Route(
                conn,
                cand.points,
                cand.corners,
                rules.route_width,
                rules.layer_wg,
                bundle_name,
                u_turn,
            )
            for conn, cand in candidate
        ]
        return routes, u_turn
    raise last_error


def _seg_point_dist(p, s1, s2) -> float:
    dx, dy = s2[0] - s1[0], s2[1] - s1[1]
    l2 = dx * dx + dy * dy
    if l2 == 0:
        return math.hypot(p[0] - s1[0], p[1] - s1[1])
    t = max(0.0, min(1.0, ((p[0] - s1[0]) * dx + (p[1] - s1[1]) * dy) / l2))
    return math.hypot(p[0] - (s1[0] + t * dx), p[1] - (s1[1] + t * dy))


def _seg_box_dist(a, b, box) -> float:
    x0, y0, x1, y1 = box
    # inside or crossing the box means zero distance
    for p in (a, b):
        if x0 <= p[0] <= x1 and y0 <= p[1] <= y1:
            return 0.0
    edges = [((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)), ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))]
    best = math.inf
    for e1, e2 in edges:
        if _seg_intersect(a, b, e1, e2):
            return 0.0
        best = min(
            best,
            _seg_point_dist(a, e1, e2),
            _seg_point_dist(b, e1, e2),
            _seg_point_dist(e1, a, b),
            _seg_point_dist(e2, a, b),
        )
    return best


def _clearance_hit(candidate, obstacles, rules: DesignRules) -> str:
    margin = rules.min_spacing + rules.route_width / 2
    for conn, cand in candidate:
        skip = {conn.a.instance, conn.b.instance}
        pts = cand.waypoints
        for iid, box in obstacles:
            if iid in skip:
                continue
            for i in range(len(pts) - 1):
                if _seg_box_dist(pts[i], pts[i + 1], box) < margin - 1e-9:
                    return f"{conn} passes within {rules.min_spacing} um of {iid}"
    return ""


def route(
    design: PicDesign,
    placement: Placement,
    registry: PdkRegistry,
    rules: DesignRules,
) -> RoutedLayout:
    """Route every design connection; raises RoutingFailure on the first
    unroutable bundle."""
    ports = port_positions(design, placement, registry)
    bundles: dict[tuple, list[tuple[PortConnection, _Endpoint, _Endpoint]]] = {}
    for conn in design.connections:
        la, lb = str(conn.a), str(conn.b)
        xa, ya, sa = ports[la]
        xb, yb, sb = ports[lb]
        ea = _Endpoint(la, (xa, ya), sa)
        eb = _Endpoint(lb, (xb, yb), sb)
        bundles.setdefault(_bundle_key(ea, eb), []).append((conn, ea, eb))

    obstacles = [(iid, p.bbox) for iid, p in sorted(placement.instances.items())]
    routes: list[Route] = []
    warnings: list[str] = []
    for key in sorted(bundles):
        name = f"{key[0][0]}.{key[0][1]}--{key[1][0]}.{key[1][1]}"
        conns = bundles[key]
        # orient every connection in the bundle consistently (a-end on key[0])
        oriented = []
        for conn, ea, eb in conns:
            if (ea.label.split(":")[0], ea.side) == key[0]:
                oriented.append((conn, ea, eb))
            else:
                oriented.append((conn, eb, ea))
        got, u_turn = _route_bundle(oriented, rules, obstacles, name)
        routes.extend(got)
        if u_turn:
            warnings.append(f"bundle {name} routed as a U-turn")
    return RoutedLayout(placement, tuple(routes), tuple(warnings))
