"""Design-rule deck: numeric limits live in data/rules.yaml, not in code."""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml


@dataclass(frozen=True)
class DesignRules:
    min_width: float  # µm, narrowest allowed waveguide
    min_spacing: float  # µm, edge-to-edge between disjoint waveguide shapes
    min_bend_radius: float  # µm
    cell_clearance: float  # µm, bbox inflation between placed cells
    bundle_pitch: float  # µm, centreline pitch of parallel routes
    route_width: float  # µm
    arc_step_deg: float  # discretization of 90° bends
    layer_wg: tuple[int, int]
    layer_heater: tuple[int, int]
    layer_metal: tuple[int, int]


def default_rules_path() -> Path:
    env = os.environ.get("PICFLOW_RULES")
    if env:
        return Path(env)
    return Path(str(resources.files("picflow") / "data" / "rules.yaml"))


def load_rules(path: str | Path | None = None) -> DesignRules:
    doc = yaml.safe_load(Path(path or default_rules_path()).read_text())
    layers = doc.get("layers", {})

    def layer(key: str, default: tuple[int, int]) -> tuple[int, int]:
        v = layers.get(key)
        return (int(v[0]), int(v[1])) if v else default

    return DesignRules(
        min_width=float(doc["min_width"]),
        min_spacing=float(doc["min_spacing"]),
        min_bend_radius=float(doc["min_bend_radius"]),
        cell_clearance=float(doc["cell_clearance"]),
        bundle_pitch=float(doc["bundle_pitch"]),
        route_width=float(doc.get("route_width", 0.5)),
        arc_step_deg=float(doc.get("arc_step_deg", 0.5)),
        layer_wg=layer("waveguide", (1, 0)),
        layer_heater=layer("heater", (47, 0)),
        layer_metal=layer("metal", (49, 0)),
    )
