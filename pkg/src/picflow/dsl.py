"""Intermediate representations bridging natural language and layout code.

Two document kinds are defined here:

* the circuit *template* — typed functional blocks plus block-level edges,
  with no concrete cells or parameter values;
* the circuit *design* — instances bound to PDK cells with parameter maps
  and explicit port-to-port connections.

Both are stored as YAML with a versioned ``schema_version`` field.  Parsing
is strict: every failure is reported as exactly one categorized error
carrying the path of the offending field.  Values are immutable after
construction and serialization is deterministic (byte-identical for equal
inputs), so ``parse(serialize(x))`` is the identity on the structural value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

import yaml

SCHEMA_VERSION = 1

_BLOCK_ID_RE = re.compile(r"^C\d+$")
_CONNECTION_RE = re.compile(
    r"^\s*([A-Za-z_]\w*)\s*:\s*([A-Za-z_]\w*)\s*--\s*([A-Za-z_]\w*)\s*:\s*([A-Za-z_]\w*)\s*$"
)


class DslError(ValueError):
    """Base class for all template/design document errors."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DslSyntaxError(DslError):
    """The document is not well-formed YAML or not a mapping."""


class DslSchemaError(DslError):
    """Missing, extra, or ill-typed fields."""


class UnknownBlockError(DslError):
    """An edge references a block id that does not exist."""


class UnknownCellError(DslError):
    """An instance is bound to a cell absent from the registry."""


class UnknownParamError(DslError):
    """A parameter name is not declared by the bound cell."""


class UnknownPortError(DslError):
    """A connection endpoint names a port the bound cell does not have."""


class DuplicatePortUseError(DslError):
    """A port appears in more than one connection."""


class WavelengthBand(str, Enum):
    O = "O"
    C = "C"
    L = "L"
    BROADBAND = "broadband"


@dataclass(frozen=True)
class Block:
    id: str
    function: str
    n_in: int | None = None
    n_out: int | None = None
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not _BLOCK_ID_RE.match(self.id):
            raise DslSchemaError(f"block id {self.id!r} does not match C<int>")
        for label, n in (("n_in", self.n_in), ("n_out", self.n_out)):
            if n is not None and n < 0:
                raise DslSchemaError(f"{label} must be non-negative, got {n}")


@dataclass(frozen=True)
class BlockEdge:
    a: str
    b: str


@dataclass(frozen=True)
class PicTemplate:
    name: str
    pdk: str
    wavelength_band: WavelengthBand
    blocks: tuple[Block, ...]
    edges: tuple[BlockEdge, ...]

    def __post_init__(self):
        ids = [b.id for b in self.blocks]
        seen: set[str] = set()
        for bid in ids:
            if bid in seen:
                raise DslSchemaError(f"duplicate block id {bid!r}", "blocks")
            seen.add(bid)
        for i, e in enumerate(self.edges):
            for end in (e.a, e.b):
                if end not in seen:
                    raise UnknownBlockError(
                        f"edge references unknown block {end!r}", f"edges[{i}]"
                    )
            if e.a == e.b:
                raise DslSchemaError("edge joins a block to itself", f"edges[{i}]")

    def block(self, bid: str) -> Block:
        for b in self.blocks:
            if b.id == bid:
                return b
        raise KeyError(bid)


@dataclass(frozen=True, order=True)
class PortRef:
    instance: str
    port: str

    def __str__(self) -> str:
        return f"{self.instance}:{self.port}"


@dataclass(frozen=True)
class PortConnection:
    a: PortRef
    b: PortRef

    def __post_init__(self):
        if self.a == self.b:
            raise DslSchemaError(f"connection joins {self.a} to itself")

    def __str__(self) -> str:
        return f"{self.a} -- {self.b}"

    @classmethod
    def parse(cls, text: str, path: str = "") -> "PortConnection":
        m = _CONNECTION_RE.match(text)
        if not m:
            raise DslSyntaxError(
                f"connection {text!r} is not of the form 'C1:o2 -- C3:o5'", path
            )
        return cls(PortRef(m.group(1), m.group(2)), PortRef(m.group(3), m.group(4)))

    def endpoints(self) -> tuple[PortRef, PortRef]:
        return (self.a, self.b)


@dataclass(frozen=True)
class Instance:
    id: str
    cell: str
    params: Mapping[str, Any] = field(default_factory=dict)
    orientation: str | None = None
    placement: tuple[float, float] | None = None
    model_stale: bool = False


@dataclass(frozen=True)
class PicDesign:
    name: str
    pdk: str
    instances: tuple[Instance, ...]
    connections: tuple[PortConnection, ...]
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        seen: set[str] = set()
        for inst in self.instances:
            if inst.id in seen:
                raise DslSchemaError(f"duplicate instance id {inst.id!r}", "instances")
            seen.add(inst.id)
        used: set[PortRef] = set()
        for i, conn in enumerate(self.connections):
            if conn.a.instance == conn.b.instance:
                raise DslSchemaError(
                    f"connection {conn} joins an instance to itself",
                    f"connections[{i}]",
                )
            for ref in conn.endpoints():
                if ref.instance not in seen:
                    raise UnknownBlockError(
                        f"connection endpoint names unknown instance {ref.instance!r}",
                        f"connections[{i}]",
                    )
                if ref in used:
                    raise DuplicatePortUseError(
                        f"port {ref} used by more than one connection",
                        f"connections[{i}]",
                    )
                used.add(ref)

    def instance(self, iid: str) -> Instance:
        for inst in self.instances:
            if inst.id == iid:
                return inst
        raise KeyError(iid)


# ---------------------------------------------------------------------------
# parsing helpers


def _load_yaml(text: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise DslSyntaxError(f"malformed YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise DslSyntaxError("document root must be a mapping")
    return doc

_sentinel = object()


def _take(doc: dict, key: str, typ, path: str, default=_sentinel):
    if key not in doc:
        if default is not _sentinel:
            return default
        raise DslSchemaError("missing required field", f"{path}{key}")
    val = doc[key]
    if typ is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, typ) or isinstance(val, bool) and typ is not bool:
        raise DslSchemaError(
            f"expected {getattr(typ, '__name__', typ)}, got {type(val).__name__}",
            f"{path}{key}",
        )
    return val


def _check_no_extra(doc: dict, allowed: set[str], path: str = ""):
    extra = sorted(set(doc) - allowed)
    if extra:
        raise DslSchemaError(f"unexpected field(s) {extra}", f"{path}{extra[0]}")


def _str_map(raw: Any, path: str) -> dict[str, str]:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise DslSchemaError("expected a mapping", path)
    out = {}
    for k, v in raw.items():
        out[str(k)] = v if isinstance(v, str) else str(v)
    return out


def _check_schema_version(doc: dict):
    v = _take(doc, "schema_version", int, "")
    if v != SCHEMA_VERSION:
        raise DslSchemaError(
            f"unsupported schema_version {v} (expected {SCHEMA_VERSION})",
            "schema_version",
        )


# ---------------------------------------------------------------------------
# template


def parse_template(text: str) -> PicTemplate:
    """Parse a YAML template document, checking every invariant."""
    doc = _load_yaml(text)
    _check_schema_version(doc)
    _check_no_extra(
        doc, {"schema_version", "name", "pdk", "wavelength_band", "blocks", "edges"}
    )
    name = _take(doc, "name", str, "")
    pdk = _take(doc, "pdk", str, "")
    band_raw = _take(doc, "wavelength_band", str, "")
    try:
        band = WavelengthBand(band_raw)
    except ValueError:
        raise DslSchemaError(
            f"unknown wavelength_band {band_raw!r} "
            f"(expected one of {[b.value for b in WavelengthBand]})",
            "wavelength_band",
        ) from None

    raw_blocks = doc.get("blocks", [])
    if not isinstance(raw_blocks, list):
        raise DslSchemaError("expected a list", "blocks")
    blocks = []
    for i, rb in enumerate(raw_blocks):
        path = f"blocks[{i}]."
        if not isinstance(rb, dict):
            raise DslSchemaError("block must be a mapping", f"blocks[{i}]")
        _check_no_extra(rb, {"id", "function", "ports", "attributes"}, path)
        bid = _take(rb, "id", str, path)
        func = _take(rb, "function", str, path)
        n_in = n_out = None
        if "ports" in rb:
            ports = _take(rb, "ports", dict, path)
            _check_no_extra(ports, {"n_in", "n_out"}, path + "ports.")
            n_in = _take(ports, "n_in", int, path + "ports.")
            n_out = _take(ports, "n_out", int, path + "ports.")
        attrs = _str_map(rb.get("attributes"), path + "attributes")
        try:
            blocks.append(Block(bid, func, n_in, n_out, attrs))
        except DslError as exc:
            raise type(exc)(str(exc), path.rstrip(".")) from None

    block_ids = {b.id for b in blocks}
    raw_edges = doc.get("edges", [])
    if not isinstance(raw_edges, list):
        raise DslSchemaError("expected a list", "edges")
    edges = []
    for i, re_ in enumerate(raw_edges):
        path = f"edges[{i}]"
        if not isinstance(re_, str):
            raise DslSchemaError("edge must be a string 'Ca -- Cb'", path)
        m = re.match(r"^\s*(\w+)\s*--\s*(\w+)\s*$", re_)
        if not m:
            raise DslSyntaxError(f"edge {re_!r} is not of the form 'C1 -- C2'", path)
        a, b = m.group(1), m.group(2)
        for end in (a, b):
            if end not in block_ids:
                raise UnknownBlockError(f"edge references unknown block {end!r}", path)
        edges.append(BlockEdge(a, b))

    return PicTemplate(name, pdk, band, tuple(blocks), tuple(edges))


def serialize_template(t: PicTemplate) -> str:
    """Deterministic YAML emission; inverse of :func:`parse_template`."""
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": t.name,
        "pdk": t.pdk,
        "wavelength_band": t.wavelength_band.value,
    }
    blocks = []
    for b in t.blocks:
        rb: dict[str, Any] = {"id": b.id, "function": b.function}
        if b.n_in is not None or b.n_out is not None:
            rb["ports"] = {"n_in": b.n_in or 0, "n_out": b.n_out or 0}
        if b.attributes:
            rb["attributes"] = {k: b.attributes[k] for k in sorted(b.attributes)}
        blocks.append(rb)
    doc["blocks"] = blocks
    if t.edges:
        doc["edges"] = [f"{e.a} -- {e.b}" for e in t.edges]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


# ---------------------------------------------------------------------------
# design


def bind_instance(inst: Instance, registry) -> Instance:
    """Validate an instance against the registry and recompute model_stale."""
    cell = registry.get(inst.cell)  # raises UnknownCellError
    declared = {p.name: p for p in cell.params}
    stale = False
    for pname, pval in inst.params.items():
        if pname not in declared:
            raise UnknownParamError(
                f"cell {cell.name!r} declares no parameter {pname!r}",
                f"instances[{inst.id}].params.{pname}",
            )
        if pval != declared[pname].default:
            stale = True
    return Instance(
        inst.id, inst.cell, dict(inst.params), inst.orientation, inst.placement, stale
    )


def validate_design(design: PicDesign, registry) -> PicDesign:
    """Re-bind every instance and check connection ports against the registry."""
    instances = tuple(bind_instance(i, registry) for i in design.instances)
    by_id = {i.id: i for i in instances}
    for i, conn in enumerate(design.connections):
        for ref in conn.endpoints():
            cell = registry.get(by_id[ref.instance].cell)
            if ref.port not in {p.name for p in cell.ports}:
                raise UnknownPortError(
                    f"cell {cell.name!r} has no port {ref.port!r}",
                    f"connections[{i}]",
                )
    return PicDesign(design.name, design.pdk, instances, design.connections, design.metadata)


def parse_design(text: str, registry=None) -> PicDesign:
    """Parse a YAML design document; validate against ``registry`` if given."""
    doc = _load_yaml(text)
    _check_schema_version(doc)
    _check_no_extra(
        doc,
        {"schema_version", "name", "pdk", "instances", "connections", "metadata"},
    )
    name = _take(doc, "name", str, "")
    pdk = _take(doc, "pdk", str, "")

    raw_instances = doc.get("instances", [])
    if not isinstance(raw_instances, list):
        raise DslSchemaError("expected a list", "instances")
    instances = []
    for i, ri in enumerate(raw_instances):
        path = f"instances[{i}]."
        if not isinstance(ri, dict):
            raise DslSchemaError("instance must be a mapping", f"instances[{i}]")
        _check_no_extra(ri, {"id", "cell", "params", "orientation", "placement"}, path)
        iid = _take(ri, "id", str, path)
        cell = _take(ri, "cell", str, path)
        raw_params = ri.get("params") or {}
        if not isinstance(raw_params, dict):
            raise DslSchemaError("expected a mapping", path + "params")
        params: dict[str, Any] = {}
        for k, v in raw_params.items():
            if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                raise DslSchemaError(
                    "parameter values must be numbers or strings", path + f"params.{k}"
                )
            params[str(k)] = float(v) if isinstance(v, (int, float)) else v
        orientation = ri.get("orientation")
        if orientation is not None and orientation not in ("N", "E", "S", "W"):
            raise DslSchemaError(
                f"orientation must be one of N/E/S/W, got {orientation!r}",
                path + "orientation",
            )
        placement = None
        if "placement" in ri:
            rp = ri["placement"]
            if not (isinstance(rp, list) and len(rp) == 2):
                raise DslSchemaError("placement must be [x, y]", path + "placement")
            placement = (float(rp[0]), float(rp[1]))
        instances.append(Instance(iid, cell, params, orientation, placement))

    raw_conns = doc.get("connections", [])
    if not isinstance(raw_conns, list):
        raise DslSchemaError("expected a list", "connections")
    connections = []
    for i, rc in enumerate(raw_conns):
        if not isinstance(rc, str):
            raise DslSchemaError("connection must be a string", f"connections[{i}]")
        connections.append(PortConnection.parse(rc, f"connections[{i}]"))

    metadata = _str_map(doc.get("metadata"), "metadata")
    design = PicDesign(name, pdk, tuple(instances), tuple(connections), metadata)
    if registry is not None:
        design = validate_design(design, registry)
    return design


def serialize_design(d: PicDesign) -> str:
    """Deterministic YAML emission; inverse of :func:`parse_design`."""
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": d.name,
        "pdk": d.pdk,
    }
    instances = []
    for inst in d.instances:
        ri: dict[str, Any] = {"id": inst.id, "cell": inst.cell}
        if inst.params:
            ri["params"] = {k: inst.params[k] for k in sorted(inst.params)}
        if inst.orientation is not None:
            ri["orientation"] = inst.orientation
        if inst.placement is not None:
            ri["placement"] = [float(inst.placement[0]), float(inst.placement[1])]
        instances.append(ri)
    doc["instances"] = instances
    doc["connections"] = [str(c) for c in d.connections]
    if d.metadata:
        doc["metadata"] = {k: d.metadata[k] for k in sorted(d.metadata)}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)
