"""Parametric geometry generators for the bundled C-band cell library.

All coordinates are in micrometres. Each generator returns raw geometry
(polygons, paths, resolved ports); the registry wraps them with parameter
bound checks and port-declaration cross-checks. Generators are pure: the
same parameters always produce identical vertex lists.
"""

from __future__ import annotations

import math

LAYER_WG = (1, 0)
LAYER_HEATER = (47, 0)
LAYER_METAL = (49, 0)

# (polygons, paths, ports) where ports maps name -> (x, y, side)
RawGeometry = tuple[list, list, dict]


def _rect(x0: float, y0: float, x1: float, y1: float) -> list[tuple[float, float]]:
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def _arc_points(cx, cy, r, a0, a1, n=32):
    return [
        (cx + r * math.cos(a0 + (a1 - a0) * i / n), cy + r * math.sin(a0 + (a1 - a0) * i / n))
        for i in range(n + 1)
    ]


def _annulus_sector(cx, cy, r_in, r_out, a0, a1, n=32):
    outer = _arc_points(cx, cy, r_out, a0, a1, n)
    inner = _arc_points(cx, cy, r_in, a1, a0, n)
    return outer + inner


def _bezier_points(p0, p1, p2, p3, n=64):
    pts = []
    for i in range(n + 1):
        t = i / n
        u = 1 - t
        x = u**3 * p0[0] + 3 * u**2 * t * p1[0] + 3 * u * t**2 * p2[0] + t**3 * p3[0]
        y = u**3 * p0[1] + 3 * u**2 * t * p1[1] + 3 * u * t**2 * p2[1] + t**3 * p3[1]
        pts.append((x, y))
    return pts


def _sbend(x0, y0, x1, y1, n=32):
    dx = x1 - x0
    return _bezier_points((x0, y0), (x0 + dx / 2, y0), (x0 + dx / 2, y1), (x1, y1), n)


def straight(params) -> RawGeometry:
    length, width = params["length"], params["width"]
    polys = [(LAYER_WG, _rect(0, -width / 2, length, width / 2))]
    ports = {"o1": (0.0, 0.0, "west"), "o2": (length, 0.0, "east")}
    return polys, [], ports


def bend_circular_90(params) -> RawGeometry:
    r, width = params["radius"], params["width"]
    poly = _annulus_sector(0, r, r - width / 2, r + width / 2, -math.pi / 2, 0)
    ports = {"o1": (0.0, 0.0, "west"), "o2": (r, r, "north")}
    return [(LAYER_WG, poly)], [], ports


def bend_circular_180(params) -> RawGeometry:
    r, width = params["radius"], params["width"]
    poly = _annulus_sector(0, r, r - width / 2, r + width / 2, -math.pi / 2, math.pi / 2)
    ports = {"o1": (0.0, 0.0, "west"), "o2": (0.0, 2 * r, "west")}
    return [(LAYER_WG, poly)], [], ports


def bezier_curve(params) -> RawGeometry:
    dx, dy, width = params["dx"], params["dy"], params["width"]
    center = _bezier_points((0, 0), (dx / 2, 0), (dx / 2, dy), (dx, dy))
    paths = [(LAYER_WG, center, width)]
    ports = {"o1": (0.0, 0.0, "west"), "o2": (dx, dy, "east")}
    return [], paths, ports


def bezier_path_length(dx: float, dy: float) -> float:
    pts = _bezier_points((0, 0), (dx / 2, 0), (dx / 2, dy), (dx, dy))
    return sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))


def directional_coupler(params) -> RawGeometry:
    length, gap, dx, dy, width = (
        params["length"], params["gap"], params["dx"], params["dy"], params["width"],
    )
    y_in = dy + (gap + width) / 2
    y_c = (gap + width) / 2
    total = 2 * dx + length
    top = (
        _sbend(0, y_in, dx, y_c)
        + [(dx + length, y_c)]
        + _sbend(dx + length, y_c, total, y_in)[1:]
    )
    bot = [(x, -y) for x, y in top]
    paths = [(LAYER_WG, top, width), (LAYER_WG, bot, width)]
    ports = {
        "o1": (0.0, y_in, "west"),
        "o2": (0.0, -y_in, "west"),
        "o3": (total, y_in, "east"),
        "o4": (total, -y_in, "east"),
    }
    return [], paths, ports


def mmi1x2(params) -> RawGeometry:
    lm, wm, width = params["length_mmi"], params["width_mmi"], params["width"]
    stub = 2.0
    sep = wm / 4
    polys = [
        (LAYER_WG, _rect(0, -width / 2, stub, width / 2)),
        (LAYER_WG, _rect(stub, -wm / 2, stub + lm, wm / 2)),
        (LAYER_WG, _rect(stub + lm, sep - width / 2, 2 * stub + lm, sep + width / 2)),
        (LAYER_WG, _rect(stub + lm, -sep - width / 2, 2 * stub + lm, -sep + width / 2)),
    ]
    total = 2 * stub + lm
    ports = {
        "o1": (0.0, 0.0, "west"),
        "o2": (total, sep, "east"),
        "o3": (total, -sep, "east"),
    }
    return polys, [], ports


def mmi2x2(params) -> RawGeometry:
    lm, wm, width = params["length_mmi"], params["width_mmi"], params["width"]
    stub = 2.0
    sep = wm / 4
    polys = [(LAYER_WG, _rect(stub, -wm / 2, stub + lm, wm / 2))]
    for y in (sep, -sep):
        polys.append((LAYER_WG, _rect(0, y - width / 2, stub, y + width / 2)))
        polys.append((LAYER_WG, _rect(stub + lm, y - width / 2, 2 * stub + lm, y + width / 2)))
    total = 2 * stub + lm
    ports = {
        "o1": (0.0, sep, "west"),
        "o2": (0.0, -sep, "west"),
        "o3": (total, sep, "east"),
        "o4": (total, -sep, "east"),
    }
    return polys, [], ports


def _mzi_body(length: float, arm_gap: float, width: float) -> list:
    # two arms plus splitter/combiner blocks, rendered as rectangles
    polys = [
        (LAYER_WG, _rect(0, -arm_gap / 2 - width, 6, arm_gap / 2 + width)),
        (LAYER_WG, _rect(length - 6, -arm_gap / 2 - width, length, arm_gap / 2 + width)),
        (LAYER_WG, _rect(6, arm_gap / 2 - width / 2, length - 6, arm_gap / 2 + width / 2)),
        (LAYER_WG, _rect(6, -arm_gap / 2 - width / 2, length - 6, -arm_gap / 2 + width / 2)),
    ]
    return polys


def mzi_1x2(params) -> RawGeometry:
    dl, width = params["delta_length"], params["width"]
    arm_gap = 10.0
    length = 40 + dl / 2
    polys = _mzi_body(length, arm_gap, width)
    ports = {
        "o1": (0.0, 0.0, "west"),
        "o2": (length, arm_gap / 2, "east"),
        "o3": (length, -arm_gap / 2, "east"),
    }
    # input stub reaching the west edge at y=0
    polys.append((LAYER_WG, _rect(0, -width / 2, 2, width / 2)))
    return polys, [], ports


def mzi_2x2(params) -> RawGeometry:
    dl, width = params["delta_length"], params["width"]
    arm_gap = 10.0
    length = 50 + dl / 2
    polys = _mzi_body(length, arm_gap, width)
    ports = {
        "o1": (0.0, arm_gap / 2, "west"),
        "o2": (0.0, -arm_gap / 2, "west"),
        "o3": (length, arm_gap / 2, "east"),
        "o4": (length, -arm_gap / 2, "east"),
    }
    return polys, [], ports


def mzi_2x2_heater_tin(params) -> RawGeometry:
    dl, hl, width = params["delta_length"], params["heater_length"], params["width"]
    arm_gap = 10.0
    length = 50 + hl + dl / 2
    polys = _mzi_body(length, arm_gap, width)
    hx0 = (length - hl) / 2
    h_h = 2.0
    for y in (arm_gap / 2, -arm_gap / 2):
        polys.append((LAYER_HEATER, _rect(hx0, y - h_h / 2, hx0 + hl, y + h_h / 2)))
    ymax = arm_gap / 2 + h_h / 2
    ports = {
        "o1": (0.0, arm_gap / 2, "west"),
        "o2": (0.0, -arm_gap / 2, "west"),
        "o3": (length, arm_gap / 2, "east"),
        "o4": (length, -arm_gap / 2, "east"),
        "e1": (hx0, ymax, "north"),
        "e2": (hx0 + hl, ymax, "north"),
    }
    return polys, [], ports


def ring_single(params) -> RawGeometry:
    r, gap, width = params["radius"], params["gap"], params["width"]
    bus_len = 2 * r + 4
    cy = width + gap + r
    polys = [
        (LAYER_WG, _rect(0, -width / 2, bus_len, width / 2)),
        (LAYER_WG, _annulus_sector(bus_len / 2, cy, r - width / 2, r + width / 2, 0, 2 * math.pi, 64)),
    ]
    ports = {"o1": (0.0, 0.0, "west"), "o2": (bus_len, 0.0, "east")}
    return polys, [], ports


def grating_coupler(params) -> RawGeometry:
    period_nm, n_periods, width = params["period_nm"], int(params["n_periods"]), params["width"]
    period = period_nm / 1000.0
    taper_len = 20.0
    gw = 12.0
    polys = [
        (LAYER_WG, [(0, -width / 2), (taper_len, -gw / 2), (taper_len, gw / 2), (0, width / 2)]),
    ]
    for i in range(n_periods):
        x0 = taper_len + i * period
        polys.append((LAYER_WG, _rect(x0, -gw / 2, x0 + period / 2, gw / 2)))
    ports = {"o1": (0.0, 0.0, "west")}
    return polys, [], ports


def edge_coupler(params) -> RawGeometry:
    length, width = params["length"], params["width"]
    tip = 0.2
    polys = [
        (LAYER_WG, [(0, -tip / 2), (length, -width / 2), (length, width / 2), (0, tip / 2)]),
    ]
    ports = {"o1": (length, 0.0, "east")}
    return polys, [], ports


def heater_tin(params) -> RawGeometry:
    length, width = params["length"], params["width"]
    h_h = 3.0
    polys = [
        (LAYER_WG, _rect(0, -width / 2, length, width / 2)),
        (LAYER_HEATER, _rect(0, width / 2, length, width / 2 + h_h)),
    ]
    ymax = width / 2 + h_h
    ports = {
        "o1": (0.0, 0.0, "west"),
        "o2": (length, 0.0, "east"),
        "e1": (length / 4, ymax, "north"),
        "e2": (3 * length / 4, ymax, "north"),
    }
    return polys, [], ports


def phase_modulator(params) -> RawGeometry:
    length, width = params["length"], params["width"]
    m_h = 5.0
    polys = [
        (LAYER_WG, _rect(0, -width / 2, length, width / 2)),
        (LAYER_METAL, _rect(0, width / 2 + 1, length, width / 2 + 1 + m_h)),
        (LAYER_METAL, _rect(0, -width / 2 - 1 - m_h, length, -width / 2 - 1)),
    ]
    ymax = width / 2 + 1 + m_h
    ports = {
        "o1": (0.0, 0.0, "west"),
        "o2": (length, 0.0, "east"),
        "e1": (length / 4, ymax, "north"),
        "e2": (3 * length / 4, ymax, "north"),
    }
    return polys, [], ports


def crossing(params) -> RawGeometry:
    size, width = params["size"], params["width"]
    polys = [
        (LAYER_WG, _rect(0, -width / 2, size, width / 2)),
        (LAYER_WG, _rect(size / 2 - width / 2, -size / 2, size / 2 + width / 2, size / 2)),
    ]
    ports = {
        "o1": (0.0, 0.0, "west"),
        "o2": (size / 2, size / 2, "north"),
        "o3": (size, 0.0, "east"),
        "o4": (size / 2, -size / 2, "south"),
    }
    return polys, [], ports


def terminator(params) -> RawGeometry:
    length, width = params["length"], params["width"]
    polys = [(LAYER_WG, [(0, -width / 2), (length, 0), (0, width / 2)])]
    ports = {"o1": (0.0, 0.0, "west")}
    return polys, [], ports


GENERATORS = {
    "straight": straight,
    "bend_circular_90": bend_circular_90,
    "bend_circular_180": bend_circular_180,
    "bezier_curve": bezier_curve,
    "directional_coupler": directional_coupler,
    "mmi1x2": mmi1x2,
    "mmi2x2": mmi2x2,
    "mzi_1x2": mzi_1x2,
    "mzi_2x2": mzi_2x2,
    "mzi_2x2_heater_tin": mzi_2x2_heater_tin,
    "ring_single": ring_single,
    "grating_coupler": grating_coupler,
    "edge_coupler": edge_coupler,
    "heater_tin": heater_tin,
    "phase_modulator": phase_modulator,
    "crossing": crossing,
    "terminator": terminator,
}
