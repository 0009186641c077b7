"""Requirement interpretation: entity extraction, drafting, template retrieval."""

from __future__ import annotations

import json
import re
from importlib import resources

from ..dsl import Block, BlockEdge, DslSchemaError, PicTemplate, WavelengthBand, parse_template
from ..gateway import Gateway, GatewayError, PromptBundle
from ..pdk.registry import _tokens
from .prompts import render_prompt
from .schemas import ENTITIES_SCHEMA, ENTITIES_SCHEMA_ID
from .types import (
    EntityComponent,
    EntityConstraint,
    EntityExtractionFailure,
    EntityList,
    EntityRelation,
)

_PORTS_ATTR_RE = re.compile(r"^(\d+)\s*[x×]\s*(\d+)$")


def extract_entities(
    gateway: Gateway, provider: str, prompt_text: str, policy=None
) -> EntityList:
    """Parse a natural-language request into a validated entity list."""
    if not prompt_text.strip():
        raise EntityExtractionFailure("empty design request")
    bundle = PromptBundle(
        system=render_prompt("extract_entities_v1"),
        user=prompt_text,
        schema_id=ENTITIES_SCHEMA_ID,
    )
    try:
        result = gateway.complete_structured(
            provider, bundle, ENTITIES_SCHEMA, policy, stage="EE"
        )
    except GatewayError as exc:
        raise EntityExtractionFailure(str(exc)) from exc
    doc = result.value
    components = tuple(
        EntityComponent(
            label=c["label"],
            function=c["function"],
            count=c.get("count", 1),
            attributes=dict(c.get("attributes", {})),
        )
        for c in doc["components"]
    )
    relations = tuple(
        EntityRelation(r["from"], r["to"], r.get("relation", ""))
        for r in doc.get("relations", [])
    )
    constraints = tuple(
        EntityConstraint(
            c["parameter"], c["value"], c.get("unit", ""), c.get("target", "")
        )
        for c in doc.get("constraints", [])
    )
    return EntityList(components, relations, constraints)


# --- block-level draft -------------------------------------------------------

_DRAFT_SHELL_RE = re.compile(r"^\s*graph\s+\w+\s*\{(.*)\}\s*$", re.DOTALL)
_DRAFT_NODE_RE = re.compile(r"^(C\d+)\s*\[label=\"([^\"]*)\"\]$")
_DRAFT_EDGE_RE = re.compile(r"^(C\d+)\s*--\s*(C\d+)$")


def parse_draft(text: str) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Parse the block-level draft dialect into (nodes, edges)."""
    m = _DRAFT_SHELL_RE.match(text.strip())
    if not m:
        raise ValueError("draft must be of the form 'graph name { ... }'")
    nodes: list[tuple[str, str]] = []
    edges: list[tuple[str, str]] = []
    for stmt in m.group(1).split(";"):
        stmt = stmt.strip()
        if not stmt:
            continue
        nm = _DRAFT_NODE_RE.match(stmt)
        if nm:
            if any(n[0] == nm.group(1) for n in nodes):
                raise ValueError(f"duplicate node {nm.group(1)}")
            nodes.append((nm.group(1), nm.group(2)))
            continue
        em = _DRAFT_EDGE_RE.match(stmt)
        if em:
            declared = {n[0] for n in nodes}
            for end in em.groups():
                if end not in declared:
                    raise ValueError(f"edge references undeclared node {end}")
            edges.append((em.group(1), em.group(2)))
            continue
        raise ValueError(f"unrecognized draft statement {stmt!r}")
    return nodes, edges


def _entities_json(entities: EntityList) -> str:
    return json.dumps(
        {
            "components": [
                {
                    "label": c.label,
                    "function": c.function,
                    "count": c.count,
                    "attributes": dict(c.attributes),
                }
                for c in entities.components
            ],
            "relations": [
                {"from": r.src, "to": r.dst, "relation": r.relation}
                for r in entities.relations
            ],
            "constraints": [
                {"parameter": c.parameter, "value": c.value, "unit": c.unit, "target": c.target}
                for c in entities.constraints
            ],
        },
        indent=2,
    )


def draft_schematic(
    gateway: Gateway, provider: str, entities: EntityList, max_attempts: int = 3
) -> str:
    """Produce a parseable block-level graph covering every component copy."""
    expected = sum(c.count for c in entities.components)
    feedback = ""
    last_error = "no attempts made"
    for _ in range(max_attempts):
        bundle = PromptBundle(
            system=render_prompt("draft_schematic_v1", entities=_entities_json(entities))
            + feedback,
            user="Draw the block-level graph for these components.",
        )
        completion = gateway.complete(provider, bundle, stage="EE")
        try:
            nodes, _edges = parse_draft(completion.text)
        except ValueError as exc:
            last_error = str(exc)
            feedback = f"\n\nYour previous reply was rejected: {last_error}"
            continue
        if len(nodes) != expected:
            last_error = f"draft has {len(nodes)} nodes but {expected} component copies were requested"
            feedback = f"\n\nYour previous reply was rejected: {last_error}"
            continue
        return completion.text
    raise EntityExtractionFailure(f"block draft never parsed: {last_error}")


def compose_template(
    entities: EntityList,
    draft_text: str,
    name: str = "composed",
    pdk: str = "generic_cband",
    band: str = "C",
) -> PicTemplate:
    """Lift a block draft into a typed template, carrying port-count hints."""
    nodes, edges = parse_draft(draft_text)
    by_function = {c.function: c for c in entities.components}
    blocks = []
    for nid, label in nodes:
        if not label.strip():
            raise DslSchemaError(f"draft node {nid} is missing its function label")
        n_in = n_out = None
        attrs: dict[str, str] = {}
        comp = by_function.get(label)
        if comp is not None:
            attrs = dict(comp.attributes)
            pm = _PORTS_ATTR_RE.match(comp.attributes.get("ports", ""))
            if pm:
                n_in, n_out = int(pm.group(1)), int(pm.group(2))
        blocks.append(Block(nid, label, n_in, n_out, attrs))
    return PicTemplate(
        name,
        pdk,
        WavelengthBand(band),
        tuple(blocks),
        tuple(BlockEdge(a, b) for a, b in edges),
    )


# --- retrieval ------------------------------------------------------------------


def load_template_library() -> tuple[PicTemplate, ...]:
    root = resources.files("picflow.data") / "templates"
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".yaml"):
            out.append(parse_template(entry.read_text()))
    return tuple(out)


def retrieve_templates(
    entities: EntityList, library: tuple[PicTemplate, ...]
) -> list[tuple[PicTemplate, float]]:
    """Rank templates by lexical overlap with the extracted functions."""
    want = set()
    for c in entities.components:
        want |= _tokens(c.function)
    ranked = []
    for t in library:
        have = set()
        for b in t.blocks:
            have |= _tokens(b.function)
        union = want | have
        score = len(want & have) / len(union) if union else 0.0
        ranked.append((t, score))
    ranked.sort(key=lambda pair: (-pair[1], pair[0].name))
    return ranked
