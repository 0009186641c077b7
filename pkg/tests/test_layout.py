"""Placement, routing, orientation search, DRC, and GDS assembly tests."""

from __future__ import annotations

import math

import pytest

from picflow.corpus import load_corpus
from picflow.dsl import PortConnection, parse_design
from picflow.gdsio import emit_gdsii, read_gdsii
from picflow.layout import (
    Exhausted,
    Placement,
    Route,
    RoutedLayout,
    RoutingFailure,
    load_rules,
    place,
    port_positions,
    rotation_search,
    route,
    run_drc,
    to_library,
)
from picflow.layout.place import PlacedInstance
from picflow.schematic import parse_dot


@pytest.fixture(scope="module")
def rules():
    return load_rules()


def _design(reg, body: str):
    return parse_design("schema_version: 1\npdk: generic_cband\n" + body, registry=reg)


def _mzi_bus(reg, swapped: bool = False):
    conns = (
        '["m0:o3 -- m1:o2", "m0:o4 -- m1:o1"]'
        if swapped
        else '["m0:o3 -- m1:o1", "m0:o4 -- m1:o2"]'
    )
    d = _design(
        reg,
        "name: bus\n"
        "instances: [{id: m0, cell: mzi_2x2}, {id: m1, cell: mzi_2x2}]\n"
        f"connections: {conns}\n",
    )
    g = parse_dot(
        "graph bus { rankdir=LR; node [shape=record];\n"
        'm0 [label="{{<o2> o2|<o1> o1} | m0: mzi_2x2 | {<o3> o3|<o4> o4}}"];\n'
        'm1 [label="{{<o2> o2|<o1> o1} | m1: mzi_2x2 | {<o3> o3|<o4> o4}}"];\n'
        + ("m0:o3 -- m1:o2; m0:o4 -- m1:o1; }" if swapped else "m0:o3 -- m1:o1; m0:o4 -- m1:o2; }")
    )
    return d, g


def _chain(reg, n: int = 2):
    inst = ", ".join(f"{{id: w{i}, cell: straight}}" for i in range(n))
    conns = ", ".join(f'"w{i}:o2 -- w{i+1}:o1"' for i in range(n - 1))
    d = _design(reg, f"name: chain\ninstances: [{inst}]\nconnections: [{conns}]\n")
    nodes = "\n".join(
        f'w{i} [label="{{{{<o1> o1}} | w{i}: straight | {{<o2> o2}}}}"];' for i in range(n)
    )
    edges = " ".join(f"w{i}:o2 -- w{i+1}:o1;" for i in range(n - 1))
    g = parse_dot("graph chain { rankdir=LR; node [shape=record];\n" + nodes + "\n" + edges + " }")
    return d, g


# --- placement ---------------------------------------------------------


def test_chain_placement_keeps_clearance(registry, rules):
    d, g = _chain(registry, 2)
    p = place(d, g, registry, rules)
    a, b = p.instances["w0"].bbox, p.instances["w1"].bbox
    assert b[0] - a[2] >= rules.cell_clearance - 1e-9


def test_single_instance_defaults(registry, rules):
    d = _design(registry, "name: one\ninstances: [{id: a, cell: straight}]\nconnections: []\n")
    g = parse_dot('graph one { rankdir=LR; node [shape=record]; a [label="{{<o1> o1} | a: straight | {<o2> o2}}"]; }')
    p = place(d, g, registry, rules)
    pl = p.instances["a"]
    assert pl.orientation == "N"
    assert pl.bbox[0] == pytest.approx(0.0)


def test_fanout_children_share_column(registry, rules):
    d = _design(
        registry,
        "name: tree\n"
        "instances: [{id: s, cell: mmi1x2}, {id: a, cell: straight}, {id: b, cell: straight}]\n"
        'connections: ["s:o2 -- a:o1", "s:o3 -- b:o1"]\n',
    )
    g = parse_dot(
        "graph tree { rankdir=LR; node [shape=record];\n"
        's [label="{{<o1> o1} | s: mmi1x2 | {<o2> o2|<o3> o3}}"];\n'
        'a [label="{{<o1> o1} | a: straight | {<o2> o2}}"];\n'
        'b [label="{{<o1> o1} | b: straight | {<o2> o2}}"];\n'
        "s:o2 -- a:o1; s:o3 -- b:o1; }"
    )
    p = place(d, g, registry, rules)
    a, b, s = p.instances["a"], p.instances["b"], p.instances["s"]
    # children stack vertically in the rank east of the splitter
    assert a.bbox[0] == pytest.approx(b.bbox[0])
    assert a.bbox[0] > s.bbox[2]
    assert a.bbox[1] - b.bbox[3] >= rules.cell_clearance - 1e-9 or b.bbox[1] - a.bbox[3] >= rules.cell_clearance - 1e-9


def test_rotated_placement_moves_ports(registry, rules):
    d = _design(registry, "name: one\ninstances: [{id: a, cell: straight}]\nconnections: []\n")
    g = parse_dot('graph one { rankdir=LR; node [shape=record]; a [label="{{<o1> o1} | a: straight | {<o2> o2}}"]; }')
    p = place(d, g, registry, rules, orientations={"a": "S"})
    pp = port_positions(d, p, registry)
    assert pp["a:o1"][2] == "east"
    assert pp["a:o2"][2] == "west"


# --- routing ------------------------------------------------------------


def _segments(points):
    return list(zip(points[:-1], points[1:]))


def _cross(s1, s2):
    (p1, p2), (p3, p4) = s1, s2

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return d1 * d2 < 0 and d3 * d4 < 0


def test_aligned_bus_routes_straight_without_intersections(registry, rules):
    d, g = _mzi_bus(registry)
    lay = route(d, place(d, g, registry, rules), registry, rules)
    assert len(lay.routes) == 2
    pp = port_positions(d, lay.placement, registry)
    for r in lay.routes:
        assert len(r.points) == 2  # straight shot, no jogs
        assert r.points[0] == pytest.approx(pp[str(r.connection.a)][:2])
        assert r.points[-1] == pytest.approx(pp[str(r.connection.b)][:2])
    segs0 = _segments(lay.routes[0].points)
    segs1 = _segments(lay.routes[1].points)
    assert not any(_cross(s0, s1) for s0 in segs0 for s1 in segs1)


def test_swapped_bus_fails_with_order_inversion(registry, rules):
    d, g = _mzi_bus(registry, swapped=True)
    p = place(d, g, registry, rules)
    with pytest.raises(RoutingFailure) as exc:
        route(d, p, registry, rules)
    assert exc.value.reason == "order inversion"


def test_offset_route_uses_two_legal_bends(registry, rules):
    """A 100 um lateral offset is absorbed by two opposed arcs."""
    d = _design(
        registry,
        "name: offset\n"
        "instances: [{id: a, cell: straight}, {id: b, cell: straight}]\n"
        'connections: ["a:o2 -- b:o1"]\n',
    )
    placement = Placement(
        {
            "a": PlacedInstance("a", "straight", (0.0, -0.25), "N", (0.0, -0.5, 10.0, 0.0)),
            "b": PlacedInstance("b", "straight", (60.0, -100.25), "N", (60.0, -100.5, 70.0, -100.0)),
        }
    )
    lay = route(d, placement, registry, rules)
    (r,) = lay.routes
    assert len(r.corners) == 2
    for (_x, _y, radius) in r.corners:
        assert radius >= rules.min_bend_radius - 1e-9
    assert r.points[0] == pytest.approx((10.0, -0.25))
    assert r.points[-1] == pytest.approx((60.0, -100.25))
    # arcs are finely sampled; only the straight legs produce long segments
    gaps = sorted(math.dist(p, q) for p, q in _segments(r.points))
    assert len(r.points) > 100
    assert gaps[len(gaps) // 2] < 1.0


def test_route_failure_reports_bundle(registry, rules):
    d = _design(
        registry,
        "name: uturn\n"
        "instances: [{id: a, cell: straight}, {id: b, cell: straight}]\n"
        'connections: ["a:o2 -- b:o2"]\n',
    )
    g = parse_dot(
        "graph uturn { rankdir=LR; node [shape=record];\n"
        'a [label="{{<o1> o1} | a: straight | {<o2> o2}}"];\n'
        'b [label="{{<o1> o1} | b: straight | {<o2> o2}}"];\n'
        "a:o2 -- b:o2; }"
    )
    with pytest.raises(RoutingFailure) as exc:
        route(d, place(d, g, registry, rules), registry, rules)
    assert exc.value.reason in ("bend radius", "clearance")
    assert "a" in exc.value.bundle and "b" in exc.value.bundle


# --- orientation search ---------------------------------------------------


def test_rotation_search_accepts_identity_first(registry, rules):
    d, g = _mzi_bus(registry)
    res = rotation_search(d, g, registry, rules, budget_seconds=30)
    assert res.attempts == 1
    assert set(res.orientations.values()) == {"N"}


def test_rotation_search_fixes_same_side_connection(registry, rules):
    d = _design(
        registry,
        "name: uturn\n"
        "instances: [{id: a, cell: straight}, {id: b, cell: straight}]\n"
        'connections: ["a:o2 -- b:o2"]\n',
    )
    g = parse_dot(
        "graph uturn { rankdir=LR; node [shape=record];\n"
        'a [label="{{<o1> o1} | a: straight | {<o2> o2}}"];\n'
        'b [label="{{<o1> o1} | b: straight | {<o2> o2}}"];\n'
        "a:o2 -- b:o2; }"
    )
    res = rotation_search(d, g, registry, rules, budget_seconds=30)
    assert res.attempts > 1
    assert res.orientations["b"] != "N"
    assert len(res.layout.routes) == 1


def test_rotation_search_exhausts_on_inverted_bus(registry, rules):
    d, g = _mzi_bus(registry, swapped=True)
    with pytest.raises(Exhausted) as exc:
        rotation_search(d, g, registry, rules, budget_seconds=30)
    assert exc.value.attempts == 16  # 4^2 assignments for two instances


# --- corpus ---------------------------------------------------------------


def test_corpus_loads_and_parses(registry):
    cases = load_corpus()
    assert len(cases) >= 30
    labels = {c.expect for c in cases}
    assert labels == {"routable", "rotation", "unroutable"}
    for case in cases:
        d = case.design(registry=registry)
        g = case.graph()
        assert {n.id for n in g.nodes} == {i.id for i in d.instances}
        assert case.components == len(d.instances)


# --- DRC -------------------------------------------------------------------


def test_drc_clean_on_terminated_line(registry, rules):
    d = _design(
        registry,
        "name: line\n"
        "instances: [{id: e, cell: edge_coupler}, {id: w, cell: straight}, {id: g, cell: grating_coupler}]\n"
        'connections: ["e:o1 -- w:o1", "w:o2 -- g:o1"]\n',
    )
    g = parse_dot(
        "graph line { rankdir=LR; node [shape=record];\n"
        'e [label="{{} | e: edge_coupler | {<o1> o1}}"];\n'
        'w [label="{{<o1> o1} | w: straight | {<o2> o2}}"];\n'
        'g [label="{{<o1> o1} | g: grating_coupler | {}}"];\n'
        "e:o1 -- w:o1; w:o2 -- g:o1; }"
    )
    lay = route(d, place(d, g, registry, rules), registry, rules)
    report = run_drc(d, lay, registry, rules)
    assert report.clean


def test_drc_flags_dangling_port(registry, rules):
    d = _design(
        registry,
        "name: dangle\n"
        "instances: [{id: s, cell: mmi1x2}, {id: a, cell: straight}]\n"
        'connections: ["s:o2 -- a:o1"]\n',
    )
    g = parse_dot(
        "graph dangle { rankdir=LR; node [shape=record];\n"
        's [label="{{<o1> o1} | s: mmi1x2 | {<o2> o2|<o3> o3}}"];\n'
        'a [label="{{<o1> o1} | a: straight | {<o2> o2}}"];\n'
        "s:o2 -- a:o1; }"
    )
    lay = route(d, place(d, g, registry, rules), registry, rules)
    report = run_drc(d, lay, registry, rules)
    opens = {v.detail for v in report.violations if v.rule == "open_port"}
    assert opens == {"s:o1", "s:o3", "a:o2"}


def test_drc_measures_route_spacing(registry, rules):
    d, g = _chain(registry, 2)
    lay = route(d, place(d, g, registry, rules), registry, rules)
    (real,) = lay.routes
    y = real.points[0][1] + 1.0
    x0 = lay.placement.instances["w0"].bbox[2] + 5.0
    intruder = Route(
        connection=PortConnection.parse("w0:o2 -- w1:o1"),
        points=((x0, y), (x0 + 6.0, y)),
        corners=(),
        width=real.width,
        layer=real.layer,
        bundle="intruder",
        u_turn=False,
    )
    dirty = RoutedLayout(lay.placement, lay.routes + (intruder,), lay.warnings)
    report = run_drc(d, dirty, registry, rules)
    spacing = [v for v in report.violations if v.rule == "min_spacing"]
    assert spacing
    assert min(v.measured for v in spacing) == pytest.approx(1.0 - real.width, abs=1e-9)


def test_drc_flags_thin_route_and_tight_bend(registry, rules):
    d, g = _chain(registry, 2)
    lay = route(d, place(d, g, registry, rules), registry, rules)
    (real,) = lay.routes
    bad = Route(
        connection=real.connection,
        points=real.points,
        corners=((real.points[0][0], real.points[0][1], 5.0),),
        width=0.2,
        layer=real.layer,
        bundle=real.bundle,
        u_turn=False,
    )
    dirty = RoutedLayout(lay.placement, (bad,), ())
    report = run_drc(d, dirty, registry, rules)
    rules_hit = {v.rule for v in report.violations}
    assert "min_width" in rules_hit
    assert "min_bend_radius" in rules_hit
    width_v = next(v for v in report.violations if v.rule == "min_width")
    assert width_v.measured == pytest.approx(0.2)
    assert width_v.limit == pytest.approx(rules.min_width)


# --- GDS assembly -----------------------------------------------------------


def test_library_round_trips_and_shares_cells(registry, rules):
    d, g = _chain(registry, 3)
    lay = route(d, place(d, g, registry, rules), registry, rules)
    lib = to_library(d, lay, registry, rules)
    names = {s.name for s in lib.structures}
    assert names == {"straight", "top"}  # identical params share one structure
    top = lib.structure("top")
    assert len(top.srefs) == 3
    assert len(top.paths) == 2
    blob = emit_gdsii(lib)
    assert emit_gdsii(read_gdsii(blob)) == blob
