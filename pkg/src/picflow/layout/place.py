"""Physical placement derived from the schematic's layered embedding.

Orientation is one of N/E/S/W, i.e. a counter-clockwise rotation of 0°, 90°,
180°, or 270° of the cell's native frame (inputs on the west edge, outputs
on the east edge). Mirroring is intentionally not used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..dsl import PicDesign
from ..pdk import CellGeometry, PdkRegistry, instantiate_geometry
from ..schematic import FALLBACK_SIZE, SchematicGraph, layered_embedding
from .rules import DesignRules

ORIENTATION_DEG = {"N": 0.0, "E": 90.0, "S": 180.0, "W": 270.0}

_SIDE_CCW = ["west", "south", "east", "north"]  # 90° CCW steps


def rotate_side(side: str, orientation: str) -> str:
    steps = {"N": 0, "E": 1, "S": 2, "W": 3}[orientation]
    return _SIDE_CCW[(_SIDE_CCW.index(side) + steps) % 4]


def _rot(x: float, y: float, orientation: str) -> tuple[float, float]:
    if orientation == "N":
        return (x, y)
    if orientation == "E":
        return (-y, x)
    if orientation == "S":
        return (-x, -y)
    return (y, -x)  # W


@dataclass(frozen=True)
class PlacedInstance:
    id: str
    cell: str
    origin: tuple[float, float]  # chip coordinates of the cell-local (0, 0)
    orientation: str
    bbox: tuple[float, float, float, float]  # chip-frame bounding box


@dataclass(frozen=True)
class Placement:
    instances: Mapping[str, PlacedInstance]

    def bbox(self) -> tuple[float, float, float, float]:
        boxes = [p.bbox for p in self.instances.values()]
        return (
            min(b[0] for b in boxes),
            min(b[1] for b in boxes),
            max(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )


def _rotated_bbox(
    bbox: tuple[float, float, float, float], orientation: str
) -> tuple[float, float, float, float]:
    corners = [
        _rot(bbox[0], bbox[1], orientation),
        _rot(bbox[2], bbox[1], orientation),
        _rot(bbox[2], bbox[3], orientation),
        _rot(bbox[0], bbox[3], orientation),
    ]
    xs = [c[0] for c in corners]
    ys = [c[1] for c in corners]
    return (min(xs), min(ys), max(xs), max(ys))


def cell_geometry(design: PicDesign, iid: str, registry: PdkRegistry) -> CellGeometry:
    inst = design.instance(iid)
    return instantiate_geometry(registry.get(inst.cell), inst.params)


def place(
    design: PicDesign,
    graph: SchematicGraph,
    registry: PdkRegistry,
    rules: DesignRules,
    orientations: Mapping[str, str] | None = None,
) -> Placement:
    """Place every instance at its embedding position with clearance.

    ``orientations`` assigns non-default rotations (used by the orientation
    search); unlisted instances stay at N.
    """
    orientations = orientations or {}
    geoms: dict[str, CellGeometry | None] = {}
    sizes: dict[str, tuple[float, float]] = {}
    for node in graph.nodes:
        o = orientations.get(node.id, "N")
        if node.id in {i.id for i in design.instances} and design.instance(node.id).cell in registry:
            g = cell_geometry(design, node.id, registry)
            geoms[node.id] = g
            rb = _rotated_bbox(g.bbox, o)
        else:
            geoms[node.id] = None
            rb = (0.0, 0.0, *FALLBACK_SIZE)
        sizes[node.id] = (rb[2] - rb[0], rb[3] - rb[1])

    emb = layered_embedding(
        graph, registry, sizes=sizes, clearance=(rules.cell_clearance, rules.cell_clearance)
    )

    placed: dict[str, PlacedInstance] = {}
    for node in graph.nodes:
        o = orientations.get(node.id, "N")
        cx, cy = emb.positions[node.id]
        g = geoms[node.id]
        local = g.bbox if g is not None else (0.0, 0.0, *FALLBACK_SIZE)
        rb = _rotated_bbox(local, o)
        # origin shifts the rotated bbox centre onto the embedding position
        ox = cx - (rb[0] + rb[2]) / 2
        oy = cy - (rb[1] + rb[3]) / 2
        placed[node.id] = PlacedInstance(
            id=node.id,
            cell=graph.node(node.id).cell,
            origin=(ox, oy),
            orientation=o,
            bbox=(rb[0] + ox, rb[1] + oy, rb[2] + ox, rb[3] + oy),
        )

    _assert_no_overlap(placed, rules.cell_clearance)
    return Placement(placed)


def _assert_no_overlap(placed: Mapping[str, PlacedInstance], clearance: float):
    items = sorted(placed.values(), key=lambda p: p.id)
    for i, a in enumerate(items):
        for b in items[i + 1 :]:
            ax0, ay0, ax1, ay1 = a.bbox
            bx0, by0, bx1, by1 = b.bbox
            if ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1:
                raise AssertionError(f"placed cells {a.id} and {b.id} overlap")


def port_positions(
    design: PicDesign, placement: Placement, registry: PdkRegistry
) -> dict[str, tuple[float, float, str]]:
    """Absolute optical port locations: 'inst:port' -> (x, y, facing side)."""
    out: dict[str, tuple[float, float, str]] = {}
    for iid, pl in placement.instances.items():
        geom = cell_geometry(design, iid, registry)
        for p in geom.ports:
            if p.kind != "optical":
                continue
            lx, ly = p.position
            rx, ry = _rot(lx, ly, pl.orientation)
            out[f"{iid}:{p.name}"] = (
                rx + pl.origin[0],
                ry + pl.origin[1],
                rotate_side(p.side, pl.orientation),
            )
    return out
