"""Turn a routed layout into a GDSII cell hierarchy."""

from __future__ import annotations

import hashlib
import json

from ..dsl import PicDesign
from ..gdsio import Boundary, GdsPath, Library, Sref, Structure
from ..pdk import PdkRegistry, instantiate_geometry
from .place import ORIENTATION_DEG, _rot, port_positions
from .route import RoutedLayout
from .rules import DesignRules


def _cell_signature(cell: str, params: dict) -> str:
    if not params:
        return cell
    blob = json.dumps({k: params[k] for k in sorted(params)}, separators=(",", ":"))
    digest = hashlib.sha1(blob.encode()).hexdigest()[:8]
    return f"{cell}_{digest}"


def to_library(
    design: PicDesign,
    layout: RoutedLayout,
    registry: PdkRegistry,
    rules: DesignRules,
    name: str = "picflow",
    top: str = "top",
) -> Library:
    """One structure per distinct (cell, params), SREFs + route PATHs on top."""
    structures: dict[str, Structure] = {}
    srefs: list[Sref] = []
    for iid in sorted(layout.placement.instances):
        pl = layout.placement.instances[iid]
        inst = design.instance(iid)
        sig = _cell_signature(inst.cell, dict(inst.params))
        if sig not in structures:
            geom = instantiate_geometry(registry.get(inst.cell), inst.params)
            boundaries = tuple(
                Boundary(layer[0], layer[1], verts) for layer, verts in geom.polygons
            )
            paths = tuple(
                GdsPath(layer[0], layer[1], w, verts) for layer, verts, w in geom.paths
            )
            structures[sig] = Structure(sig, boundaries, paths)
        srefs.append(Sref(sig, pl.origin, ORIENTATION_DEG[pl.orientation], False))

    route_paths = tuple(
        GdsPath(r.layer[0], r.layer[1], r.width, r.points) for r in layout.routes
    )
    top_struct = Structure(top, (), route_paths, tuple(srefs))
    return Library(name, tuple(structures.values()) + (top_struct,))


def geometry_json(
    design: PicDesign, layout: RoutedLayout, registry: PdkRegistry
) -> dict:
    """Flat, viewer-friendly geometry: everything in global coordinates.

    Browsers consume this instead of parsing GDSII; the binary reader stays
    single-sourced in :mod:`picflow.gdsio`.
    """
    instances = []
    for iid in sorted(layout.placement.instances):
        pl = layout.placement.instances[iid]
        inst = design.instance(iid)
        geom = instantiate_geometry(registry.get(inst.cell), inst.params)

        def place(points):
            return [
                [round(x + pl.origin[0], 6), round(y + pl.origin[1], 6)]
                for x, y in (_rot(px, py, pl.orientation) for px, py in points)
            ]

        instances.append(
            {
                "id": iid,
                "cell": inst.cell,
                "origin": list(pl.origin),
                "orientation": pl.orientation,
                "bbox": list(pl.bbox),
                "polygons": [
                    {"layer": list(layer), "points": place(verts)}
                    for layer, verts in geom.polygons
                ],
                "paths": [
                    {"layer": list(layer), "width": w, "points": place(verts)}
                    for layer, verts, w in geom.paths
                ],
            }
        )
    routes = [
        {
            "layer": list(r.layer),
            "width": r.width,
            "points": [[round(x, 6), round(y, 6)] for x, y in r.points],
        }
        for r in layout.routes
    ]
    ports = {
        label: [round(x, 6), round(y, 6), side]
        for label, (x, y, side) in sorted(
            port_positions(design, layout.placement, registry).items()
        )
    }
    xs = [v for i in instances for v in (i["bbox"][0], i["bbox"][2])]
    ys = [v for i in instances for v in (i["bbox"][1], i["bbox"][3])]
    for r in routes:
        xs.extend(p[0] for p in r["points"])
        ys.extend(p[1] for p in r["points"])
    bbox = [min(xs), min(ys), max(xs), max(ys)] if xs else [0.0, 0.0, 0.0, 0.0]
    return {"bbox": bbox, "instances": instances, "routes": routes, "ports": ports}
