"""Cell registry for the bundled generic C-band silicon photonics library.

Each cell is described by a YAML manifest (structured docstring, parameter
specs, port declarations, generator and S-model identifiers). The registry
is immutable after load and safe to share across concurrent pipeline runs.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from ..dsl import UnknownCellError, UnknownParamError
from .geometry import GENERATORS
from .smodels import SMODELS, OpticalConstants


class ManifestError(Exception):
    """A cell manifest is missing, malformed, or inconsistent."""


class ParamOutOfRangeError(ValueError):
    """A parameter value violates its declared [min, max] bounds."""


class OutOfBandError(ValueError):
    """A wavelength lies outside the cell's declared validity window."""


@dataclass(frozen=True)
class ParamSpec:
    name: str
    unit: str
    default: float | str
    min: float | None = None
    max: float | None = None


@dataclass(frozen=True)
class PortSpec:
    name: str
    side: str  # west | east | north | south
    kind: str  # optical | electrical
    position: tuple[float, float] | None = None
    width: float | None = None


@dataclass(frozen=True)
class StructuredDoc:
    functionality: str
    optical_ports: str
    use_cases: str
    technology: str
    key_parameters: str

    def __post_init__(self):
        for f in ("functionality", "optical_ports", "use_cases", "technology", "key_parameters"):
            if not getattr(self, f).strip():
                raise ManifestError(f"docstring field {f!r} must be non-empty")


@dataclass(frozen=True)
class CellGeometry:
    polygons: tuple  # ((layer, (vertices...)), ...)
    paths: tuple  # ((layer, (vertices...), width), ...)
    ports: tuple[PortSpec, ...]
    bbox: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax


@dataclass(frozen=True)
class SMatrix:
    ports: tuple[str, ...]
    data: np.ndarray
    wavelength: float


@dataclass(frozen=True)
class PdkCell:
    name: str
    docstring: StructuredDoc
    params: tuple[ParamSpec, ...]
    ports: tuple[PortSpec, ...]
    generator: str
    smodel: str
    lossless: bool = False
    band: tuple[float, float] = (1.50, 1.60)

    def param(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise UnknownParamError(f"cell {self.name!r} declares no parameter {name!r}")

    def default_params(self) -> dict[str, Any]:
        return {p.name: p.default for p in self.params}

    def optical_ports(self) -> tuple[PortSpec, ...]:
        return tuple(p for p in self.ports if p.kind == "optical")

    def resolve_params(self, params: Mapping[str, Any] | None) -> dict[str, Any]:
        """Merge with defaults and enforce bounds."""
        merged = self.default_params()
        for k, v in (params or {}).items():
            spec = self.param(k)  # raises UnknownParamError
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                v = float(v)
                if spec.min is not None and v < spec.min:
                    raise ParamOutOfRangeError(
                        f"{self.name}.{k} = {v} below minimum {spec.min}"
                    )
                if spec.max is not None and v > spec.max:
                    raise ParamOutOfRangeError(
                        f"{self.name}.{k} = {v} above maximum {spec.max}"
                    )
            merged[k] = v
        return merged


@dataclass(frozen=True)
class PdkRegistry:
    name: str
    cells: Mapping[str, PdkCell]
    constants: OpticalConstants = field(default_factory=OpticalConstants)

    def get(self, name: str) -> PdkCell:
        try:
            return self.cells[name]
        except KeyError:
            raise UnknownCellError(f"no cell named {name!r} in PDK {self.name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.cells

    def names(self) -> list[str]:
        return sorted(self.cells)


def default_manifest_dir() -> Path:
    env = os.environ.get("PICFLOW_PDK")
    if env:
        return Path(env)
    return Path(str(resources.files("picflow") / "data" / "pdk"))


def _parse_cell(doc: dict, source: str) -> PdkCell:
    try:
        ds = doc["docstring"]
        docstring = StructuredDoc(
            functionality=ds["functionality"],
            optical_ports=ds["optical_ports"],
            use_cases=ds["use_cases"],
            technology=ds["technology"],
            key_parameters=ds["key_parameters"],
        )
        params = tuple(
            ParamSpec(
                name=p["name"],
                unit=p.get("unit", ""),
                default=p["default"] if isinstance(p["default"], str) else float(p["default"]),
                min=None if p.get("min") is None else float(p["min"]),
                max=None if p.get("max") is None else float(p["max"]),
            )
            for p in doc.get("params", [])
        )
        ports = tuple(
            PortSpec(name=p["name"], side=p["side"], kind=p.get("kind", "optical"))
            for p in doc["ports"]
        )
        band = doc.get("band", [1.50, 1.60])
        cell = PdkCell(
            name=doc["name"],
            docstring=docstring,
            params=params,
            ports=ports,
            generator=doc["generator"],
            smodel=doc["smodel"],
            lossless=bool(doc.get("lossless", False)),
            band=(float(band[0]), float(band[1])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{source}: {exc!r}") from exc

    names = [p.name for p in cell.ports]
    if len(set(names)) != len(names):
        raise ManifestError(f"{source}: duplicate port names")
    if cell.generator not in GENERATORS:
        raise ManifestError(f"{source}: unknown generator {cell.generator!r}")
    if cell.smodel not in SMODELS:
        raise ManifestError(f"{source}: unknown smodel {cell.smodel!r}")
    for p in cell.params:
        if isinstance(p.default, float):
            if p.min is not None and p.default < p.min:
                raise ManifestError(f"{source}: default of {p.name} below min")
            if p.max is not None and p.default > p.max:
                raise ManifestError(f"{source}: default of {p.name} above max")
    return cell


def load_registry(manifest_path: str | Path | None = None) -> PdkRegistry:
    """Load every per-cell manifest file found under the manifest directory."""
    root = Path(manifest_path) if manifest_path is not None else default_manifest_dir()
    if not root.is_dir():
        raise ManifestError(f"manifest directory {root} does not exist")
    cells: dict[str, PdkCell] = {}
    for path in sorted(root.glob("*.yaml")):
        if path.name == "pdk.yaml":
            continue
        try:
            doc = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ManifestError(f"{path}: {exc}") from exc
        cell = _parse_cell(doc, str(path))
        if cell.name in cells:
            raise ManifestError(f"{path}: duplicate cell name {cell.name!r}")
        cells[cell.name] = cell

    name = "generic_cband"
    constants = OpticalConstants()
    meta = root / "pdk.yaml"
    if meta.exists():
        doc = yaml.safe_load(meta.read_text()) or {}
        name = doc.get("name", name)
        c = doc.get("constants", {})
        constants = OpticalConstants(
            n_eff=float(c.get("n_eff", constants.n_eff)),
            n_g=float(c.get("n_g", constants.n_g)),
            alpha_db_cm=float(c.get("alpha_db_cm", constants.alpha_db_cm)),
            lam0=float(c.get("lam0", constants.lam0)),
        )
    if not cells:
        raise ManifestError(f"no cell manifests found under {root}")
    return PdkRegistry(name=name, cells=cells, constants=constants)


# ---------------------------------------------------------------------------
# search

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:x[0-9]+)?")

_STOPWORDS = frozenset(
    "a an and are as at be between by for from in into is it of on or over the to two with".split()
)


def _tokens(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.lower())) - _STOPWORDS


def search_cells(registry: PdkRegistry, query: str, limit: int = 8) -> list[tuple[PdkCell, float]]:
    """Rank cells by weighted token overlap with their structured docstrings.

    Functionality (plus the cell name) weighs 3, key parameters 2, the
    remaining docstring fields 1. Deterministic; ties break by cell name.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    q = _tokens(query)
    if not q:
        return []
    scored = []
    for cell in registry.cells.values():
        d = cell.docstring
        heavy = _tokens(d.functionality) | _tokens(cell.name.replace("_", " "))
        medium = _tokens(d.key_parameters)
        light = _tokens(d.optical_ports) | _tokens(d.use_cases) | _tokens(d.technology)
        score = 0.0
        for tok in q:
            if tok in heavy:
                score += 3
            if tok in medium:
                score += 2
            if tok in light:
                score += 1
        if query.strip().lower() == cell.name.lower():
            score += 100  # exact-name dominance
        if score > 0:
            scored.append((cell, score))
    scored.sort(key=lambda cs: (-cs[1], cs[0].name))
    return scored[:limit]


# ---------------------------------------------------------------------------
# geometry & models


def instantiate_geometry(cell: PdkCell, params: Mapping[str, Any] | None = None) -> CellGeometry:
    """Generate geometry for the cell, checking bounds and port declarations."""
    merged = cell.resolve_params(params)
    polys, paths, raw_ports = GENERATORS[cell.generator](merged)

    xs, ys = [], []
    for _, verts in polys:
        for x, y in verts:
            xs.append(x)
            ys.append(y)
    for _, verts, _w in paths:
        for x, y in verts:
            xs.append(x)
            ys.append(y)
    if not xs:
        raise ManifestError(f"cell {cell.name!r} generated empty geometry")
    bbox = (min(xs), min(ys), max(xs), max(ys))

    declared = {p.name: p for p in cell.ports}
    if set(raw_ports) != set(declared):
        raise ManifestError(
            f"cell {cell.name!r} generated ports {sorted(raw_ports)} "
            f"but declares {sorted(declared)}"
        )
    width = float(merged.get("width", 0.5))
    ports = []
    for spec in cell.ports:
        x, y, side = raw_ports[spec.name]
        if side != spec.side:
            raise ManifestError(
                f"cell {cell.name!r} port {spec.name} generated on side {side}, "
                f"declared {spec.side}"
            )
        eps = 1e-9
        on_edge = (
            abs(x - bbox[0]) < eps or abs(x - bbox[2]) < eps
            or abs(y - bbox[1]) < eps or abs(y - bbox[3]) < eps
        )
        if not on_edge:
            raise ManifestError(f"cell {cell.name!r} port {spec.name} not on bounding box")
        ports.append(PortSpec(spec.name, spec.side, spec.kind, (x, y), width))

    freeze_polys = tuple((layer, tuple((float(x), float(y)) for x, y in verts)) for layer, verts in polys)
    freeze_paths = tuple(
        (layer, tuple((float(x), float(y)) for x, y in verts), float(w)) for layer, verts, w in paths
    )
    return CellGeometry(freeze_polys, freeze_paths, tuple(ports), bbox)


def default_smatrix(
    cell: PdkCell,
    params: Mapping[str, Any] | None,
    wavelengths: list[float],
    constants: OpticalConstants | None = None,
) -> list[SMatrix]:
    """Evaluate the cell's default S-model at each wavelength (micrometres)."""
    merged = cell.resolve_params(params)
    consts = constants or OpticalConstants()
    out = []
    for lam in wavelengths:
        if not (cell.band[0] - 1e-12 <= lam <= cell.band[1] + 1e-12):
            raise OutOfBandError(
                f"wavelength {lam} um outside validity window {cell.band} of {cell.name!r}"
            )
        ports, data = SMODELS[cell.smodel](merged, consts, lam)
        out.append(SMatrix(tuple(ports), data, lam))
    return out
