"""Port-level schematic graphs with a record-node DOT dialect.

The DOT dialect is deliberately narrow: undirected ``graph``, ``rankdir=LR``,
``node [shape=record]``, node labels of the form
``{{<o2> o2|<o1> o1} | N1: cell_name | {<o3> o3|<o4> o4}}`` (west port group,
title, east port group, each group listing ports top to bottom), and edges
``N1:o3 -- N2:o1``. Anything else — including trailing text after the closing
brace, the failure mode of models that append commentary — is a syntax error.

The module also computes a deterministic layered embedding (longest-path
ranks, four barycentre sweeps) and counts edge crossings by exhaustive
pairwise segment intersection over that embedding.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .dsl import PicDesign, PortConnection, PortRef

NODE_CLEARANCE_X = 20.0
NODE_CLEARANCE_Y = 20.0
FALLBACK_SIZE = (10.0, 10.0)


class DotSyntaxError(ValueError, SyntaxError):
    """The text is not in the supported DOT dialect."""


class UnknownPortFieldError(ValueError):
    """An edge references a port field not declared in the node's record."""


class CyclicGraphError(ValueError):
    """Raised only when feedback-arc breaking is disabled."""


@dataclass(frozen=True)
class SchematicNode:
    id: str
    cell: str
    west_ports: tuple[str, ...]  # top to bottom
    east_ports: tuple[str, ...]  # top to bottom

    def has_port(self, name: str) -> bool:
        return name in self.west_ports or name in self.east_ports


@dataclass(frozen=True)
class SchematicGraph:
    nodes: tuple[SchematicNode, ...]
    edges: tuple[PortConnection, ...]
    name: str = "g"

    def node(self, nid: str) -> SchematicNode:
        for n in self.nodes:
            if n.id == nid:
                return n
        raise KeyError(nid)

    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]


@dataclass(frozen=True)
class Violation:
    code: str  # phantom_node | missing_node | unknown_port | duplicate_port_use | self_loop
    subject: str
    message: str


@dataclass(frozen=True)
class Embedding:
    ranks: Mapping[str, int]
    orders: Mapping[str, int]
    positions: Mapping[str, tuple[float, float]]  # node centre, micrometres
    port_positions: Mapping[PortRef, tuple[float, float]]
    reversed_edges: frozenset[PortConnection] = frozenset()


# ---------------------------------------------------------------------------
# DOT parsing / emission

_LABEL_RE = re.compile(
    r"^\s*\{\s*\{(?P<west>[^{}]*)\}\s*\|\s*(?P<id>\w+)\s*:\s*(?P<cell>[^|{}]+?)\s*\|\s*\{(?P<east>[^{}]*)\}\s*\}\s*$"
)
_FIELD_RE = re.compile(r"^\s*<(?P<port>\w+)>\s*(?P<text>\w+)\s*$")
_NODE_STMT_RE = re.compile(r"^(?P<id>\w+)\s*\[\s*label\s*=\s*\"(?P<label>.*)\"\s*\]$")
_EDGE_STMT_RE = re.compile(
    r"^(?P<a>\w+)\s*:\s*(?P<ap>\w+)\s*--\s*(?P<b>\w+)\s*:\s*(?P<bp>\w+)$"
)


def graph_from_design(design: PicDesign, registry) -> SchematicGraph:
    """Build the port-level graph implied by a design's cells and netlist."""
    nodes = []
    for inst in design.instances:
        opt = registry.get(inst.cell).optical_ports()
        nodes.append(
            SchematicNode(
                inst.id,
                inst.cell,
                tuple(p.name for p in opt if p.side == "west"),
                tuple(p.name for p in opt if p.side == "east"),
            )
        )
    return SchematicGraph(tuple(nodes), tuple(design.connections), design.name)


def _parse_port_group(text: str, nid: str) -> tuple[str, ...]:
    text = text.strip()
    if not text:
        return ()
    ports = []
    for fld in text.split("|"):
        m = _FIELD_RE.match(fld)
        if not m or m.group("port") != m.group("text"):
            raise DotSyntaxError(
                f"node {nid}: malformed record field {fld!r} (expected '<oK> oK')"
            )
        ports.append(m.group("port"))
    return tuple(ports)


def parse_dot(text: str) -> SchematicGraph:
    """Parse the record-node DOT dialect into a schematic graph."""
    m = re.match(r"\s*graph\s+(\w+)\s*\{", text)
    if not m:
        raise DotSyntaxError("expected 'graph <name> {' header")
    name = m.group(1)
    body_start = m.end()
    close = text.rfind("}")
    if close < body_start:
        raise DotSyntaxError("missing closing '}'")
    trailing = text[close + 1 :].strip()
    if trailing:
        raise DotSyntaxError(f"trailing content after closing brace: {trailing[:60]!r}")
    body = text[body_start:close]

    nodes: list[SchematicNode] = []
    node_ids: set[str] = set()
    edges: list[PortConnection] = []
    for raw in body.split(";"):
        stmt = raw.strip()
        if not stmt:
            continue
        if re.fullmatch(r"rankdir\s*=\s*LR", stmt):
            continue
        if re.fullmatch(r"node\s*\[\s*shape\s*=\s*record\s*\]", stmt):
            continue
        nm = _NODE_STMT_RE.match(stmt)
        if nm:
            lm = _LABEL_RE.match(nm.group("label"))
            if not lm:
                raise DotSyntaxError(f"node {nm.group('id')}: malformed record label")
            if lm.group("id") != nm.group("id"):
                raise DotSyntaxError(
                    f"node {nm.group('id')}: label title names {lm.group('id')!r}"
                )
            if nm.group("id") in node_ids:
                raise DotSyntaxError(f"duplicate node {nm.group('id')!r}")
            node = SchematicNode(
                id=nm.group("id"),
                cell=lm.group("cell").strip(),
                west_ports=_parse_port_group(lm.group("west"), nm.group("id")),
                east_ports=_parse_port_group(lm.group("east"), nm.group("id")),
            )
            dup = set(node.west_ports) & set(node.east_ports)
            if dup or len(set(node.west_ports)) != len(node.west_ports) or len(
                set(node.east_ports)
            ) != len(node.east_ports):
                raise DotSyntaxError(f"node {node.id}: duplicate port fields")
            nodes.append(node)
            node_ids.add(node.id)
            continue
        em = _EDGE_STMT_RE.match(stmt)
        if em:
            edges.append(
                PortConnection(
                    PortRef(em.group("a"), em.group("ap")),
                    PortRef(em.group("b"), em.group("bp")),
                )
            )
            continue
        raise DotSyntaxError(f"unsupported statement: {stmt[:60]!r}")

    by_id = {n.id: n for n in nodes}
    for e in edges:
        for ref in e.endpoints():
            if ref.instance not in by_id:
                raise DotSyntaxError(f"edge references undeclared node {ref.instance!r}")
            if not by_id[ref.instance].has_port(ref.port):
                raise UnknownPortFieldError(
                    f"node {ref.instance} has no record field <{ref.port}>"
                )
    return SchematicGraph(tuple(nodes), tuple(edges), name)


def emit_dot(graph: SchematicGraph) -> str:
    """Deterministic DOT emission; inverse of :func:`parse_dot`."""
    lines = [f"graph {graph.name} {{", "  rankdir=LR;", "  node [shape=record];"]
    for n in graph.nodes:
        west = "|".join(f"<{p}> {p}" for p in n.west_ports)
        east = "|".join(f"<{p}> {p}" for p in n.east_ports)
        lines.append(
            f'  {n.id} [label="{{{{{west}}} | {n.id}: {n.cell} | {{{east}}}}}"];'
        )
    for e in graph.edges:
        lines.append(f"  {e.a} -- {e.b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validation


def validate_graph(graph: SchematicGraph, design: PicDesign, registry=None) -> list[Violation]:
    """Structural check of a schematic against the design it claims to realize."""
    violations: list[Violation] = []
    design_ids = {i.id for i in design.instances}
    graph_ids = set(graph.node_ids())
    for nid in sorted(graph_ids - design_ids):
        violations.append(
            Violation("phantom_node", nid, f"node {nid!r} is not a design instance")
        )
    for iid in sorted(design_ids - graph_ids):
        violations.append(
            Violation("missing_node", iid, f"design instance {iid!r} missing from graph")
        )

    cell_ports: dict[str, set[str]] = {}
    if registry is not None:
        for inst in design.instances:
            if inst.cell in registry:
                cell_ports[inst.id] = {
                    p.name for p in registry.get(inst.cell).optical_ports()
                }

    used: set[PortRef] = set()
    for e in graph.edges:
        if e.a.instance == e.b.instance:
            violations.append(
                Violation("self_loop", str(e), f"edge {e} joins a node to itself")
            )
        for ref in e.endpoints():
            if ref.instance in cell_ports and ref.port not in cell_ports[ref.instance]:
                violations.append(
                    Violation(
                        "unknown_port",
                        str(ref),
                        f"cell of {ref.instance!r} has no optical port {ref.port!r}",
                    )
                )
            if ref in used:
                violations.append(
                    Violation(
                        "duplicate_port_use", str(ref), f"port {ref} used more than once"
                    )
                )
            used.add(ref)
    return violations


# ---------------------------------------------------------------------------
# layered embedding


def _natural_key(name: str) -> tuple:
    return tuple(int(s) if s.isdigit() else s for s in re.split(r"(\d+)", name))


def _edge_direction(graph: SchematicGraph, e: PortConnection) -> tuple[str, str]:
    """Directed (source, target) for ranking: east-side endpoints feed west-side."""
    na, nb = graph.node(e.a.instance), graph.node(e.b.instance)
    a_out = e.a.port in na.east_ports
    b_out = e.b.port in nb.east_ports
    if a_out and not b_out:
        return (e.a.instance, e.b.instance)
    if b_out and not a_out:
        return (e.b.instance, e.a.instance)
    # same-side connection: orient by declaration order for determinism
    return (e.a.instance, e.b.instance)


def _break_cycles(ids: list[str], arcs: list[tuple[str, str, PortConnection]]):
    """Deterministic DFS feedback-arc detection; back arcs are reversed."""
    adj: dict[str, list[tuple[str, PortConnection]]] = {i: [] for i in ids}
    for u, v, e in arcs:
        adj[u].append((v, e))
    state: dict[str, int] = {i: 0 for i in ids}  # 0 new, 1 active, 2 done
    feedback: set[PortConnection] = set()

    def visit(u: str):
        state[u] = 1
        for v, e in adj[u]:
            if state[v] == 0:
                visit(v)
            elif state[v] == 1:
                feedback.add(e)
        state[u] = 2

    for i in ids:
        if state[i] == 0:
            visit(i)
    return feedback


def _node_size(cell_name: str, registry) -> tuple[float, float]:
    if registry is not None and cell_name in registry:
        from .pdk import instantiate_geometry

        bbox = instantiate_geometry(registry.get(cell_name)).bbox
        return (bbox[2] - bbox[0], bbox[3] - bbox[1])
    return FALLBACK_SIZE


def layered_embedding(
    graph: SchematicGraph,
    registry=None,
    sizes: Mapping[str, tuple[float, float]] | None = None,
    clearance: tuple[float, float] = (NODE_CLEARANCE_X, NODE_CLEARANCE_Y),
) -> Embedding:
    """Longest-path ranks, 4 barycentre sweeps, physical-size coordinates.

    ``sizes`` overrides per-node footprints (e.g. for rotated placement);
    otherwise sizes come from registry geometry with a nominal fallback.
    """
    ids = graph.node_ids()
    if not ids:
        return Embedding({}, {}, {}, {})
    arcs = []
    for e in graph.edges:
        u, v = _edge_direction(graph, e)
        if u != v:
            arcs.append((u, v, e))
    feedback = _break_cycles(ids, arcs)
    directed = [
        (v, u, e) if e in feedback else (u, v, e) for u, v, e in arcs
    ]

    # longest-path ranks from sources
    preds: dict[str, list[str]] = {i: [] for i in ids}
    succs: dict[str, list[str]] = {i: [] for i in ids}
    for u, v, _ in directed:
        preds[v].append(u)
        succs[u].append(v)
    ranks: dict[str, int] = {}
    remaining = dict.fromkeys(ids)
    indeg = {i: len(preds[i]) for i in ids}
    queue = [i for i in ids if indeg[i] == 0]
    for i in queue:
        ranks[i] = 0
    qi = 0
    while qi < len(queue):
        u = queue[qi]
        qi += 1
        for v in succs[u]:
            ranks[v] = max(ranks.get(v, 0), ranks[u] + 1)
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    for i in ids:  # isolated cycles fully broken above; default rank 0
        ranks.setdefault(i, 0)

    # barycentre ordering
    by_rank: dict[int, list[str]] = {}
    for i in ids:
        by_rank.setdefault(ranks[i], []).append(i)
    max_rank = max(by_rank)
    neighbors: dict[str, list[str]] = {i: [] for i in ids}
    for u, v, _ in directed:
        neighbors[u].append(v)
        neighbors[v].append(u)

    order: dict[str, int] = {}
    for r in sorted(by_rank):
        for k, nid in enumerate(by_rank[r]):
            order[nid] = k

    def sweep(rank_sequence: Iterable[int]):
        for r in rank_sequence:
            row = by_rank[r]
            def barycentre(nid: str) -> float:
                adj = [order[n] for n in neighbors[nid] if ranks[n] != r]
                return sum(adj) / len(adj) if adj else float(order[nid])
            row.sort(key=lambda nid: (barycentre(nid), order[nid]))
            for k, nid in enumerate(row):
                order[nid] = k

    for _ in range(2):  # 4 passes total: down, up, down, up
        sweep(range(0, max_rank + 1))
        sweep(range(max_rank, -1, -1))

    # coordinates
    if sizes is None:
        sizes = {i: _node_size(graph.node(i).cell, registry) for i in ids}
    rank_width = {r: max(sizes[i][0] for i in row) for r, row in by_rank.items()}
    x_centre: dict[int, float] = {}
    x = 0.0
    for r in sorted(by_rank):
        x_centre[r] = x + rank_width[r] / 2
        x += rank_width[r] + clearance[0]
    positions: dict[str, tuple[float, float]] = {}
    for r, row in by_rank.items():
        y = 0.0
        for nid in sorted(row, key=lambda n: order[n]):  # top to bottom
            h = sizes[nid][1]
            positions[nid] = (x_centre[r], y - h / 2)
            y -= h + clearance[1]

    port_positions: dict[PortRef, tuple[float, float]] = {}
    for n in graph.nodes:
        cx, cy = positions[n.id]
        w, h = sizes[n.id]
        for group, sign in ((n.west_ports, -1.0), (n.east_ports, 1.0)):
            k = len(group)
            # lowest-numbered port sits at the top of each side, matching the
            # cell library's geometric convention regardless of label order
            for j, p in enumerate(sorted(group, key=_natural_key)):
                py = cy + (h / 2) * (1 - (2 * j + 1) / k) if k else cy
                port_positions[PortRef(n.id, p)] = (cx + sign * w / 2, py)

    return Embedding(
        ranks=dict(ranks),
        orders=dict(order),
        positions=positions,
        port_positions=port_positions,
        reversed_edges=frozenset(feedback),
    )


# ---------------------------------------------------------------------------
# crossing detection


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def segments_cross(a1, a2, b1, b2) -> bool:
    """Proper intersection of open segments; shared endpoints excluded."""
    if a1 in (b1, b2) or a2 in (b1, b2):
        return False
    d1 = _orient(b1, b2, a1)
    d2 = _orient(b1, b2, a2)
    d3 = _orient(a1, a2, b1)
    d4 = _orient(a1, a2, b2)
    return d1 * d2 < 0 and d3 * d4 < 0


def count_crossings(graph: SchematicGraph, embedding: Embedding) -> int:
    """Exhaustive pairwise segment-intersection count over the embedding."""
    segs = []
    for e in graph.edges:
        segs.append((embedding.port_positions[e.a], embedding.port_positions[e.b]))
    n = len(segs)
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if segments_cross(segs[i][0], segs[i][1], segs[j][0], segs[j][1]):
                count += 1
    return count


def count_crossings_bilayer(edge_pairs: list[tuple[int, int]]) -> int:
    """Inversion count for two-layer drawings: edges as (top order, bottom order).

    Optimized counterpart of :func:`count_crossings` for graphs whose edges all
    join adjacent ranks; two edges cross iff their endpoint orders interleave.
    """
    ordered = sorted(edge_pairs)
    seq = [b for _, b in ordered]
    # merge-sort inversion count, counting strict inversions only
    def count_inv(a: list[int]) -> tuple[list[int], int]:
        if len(a) <= 1:
            return a, 0
        mid = len(a) // 2
        left, il = count_inv(a[:mid])
        right, ir = count_inv(a[mid:])
        merged = []
        inv = il + ir
        i = j = 0
        while i < len(left) and j < len(right):
            if left[i] <= right[j]:
                merged.append(left[i])
                i += 1
            else:
                inv += len(left) - i
                merged.append(right[j])
                j += 1
        merged.extend(left[i:])
        merged.extend(right[j:])
        return merged, inv

    _, inv = count_inv(seq)
    return inv
