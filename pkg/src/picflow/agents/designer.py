"""Component selection, parameter configuration, and schematic refinement."""

from __future__ import annotations

import json

from ..dsl import Instance, PicDesign, PicTemplate, bind_instance, validate_design
from ..gateway import Gateway, GatewayError, PromptBundle
from ..pdk import ParamOutOfRangeError, PdkRegistry
from ..pdk.registry import _tokens, search_cells
from ..schematic import (
    DotSyntaxError,
    SchematicGraph,
    UnknownPortFieldError,
    count_crossings,
    layered_embedding,
    parse_dot,
    validate_graph,
)
from .prompts import render_prompt
from .schemas import GRADES_SCHEMA, GRADES_SCHEMA_ID
from .types import (
    BlockCandidates,
    Candidate,
    CandidateTable,
    ComponentSelectionFailure,
    EntityConstraint,
    ParamConfigurationFailure,
    RefinementIteration,
    RefinementTrace,
    SchematicGenerationFailure,
    sort_candidates,
)

_POOL_SIZE = 8


def _port_counts(cell) -> tuple[int, int]:
    opt = cell.optical_ports()
    return (
        sum(1 for p in opt if p.side == "west"),
        sum(1 for p in opt if p.side == "east"),
    )


def _candidates_json(pool) -> str:
    return json.dumps(
        [
            {
                "name": cell.name,
                "functionality": cell.docstring.functionality,
                "optical_ports": cell.docstring.optical_ports,
                "use_cases": cell.docstring.use_cases,
                "inputs": _port_counts(cell)[0],
                "outputs": _port_counts(cell)[1],
            }
            for cell, _score in pool
        ],
        indent=2,
    )


def select_components(
    gateway: Gateway,
    provider: str,
    template: PicTemplate,
    registry: PdkRegistry,
    policy=None,
) -> CandidateTable:
    """Grade registry cells per template block; the model proposes, code disposes."""
    rows: list[BlockCandidates] = []
    for block in template.blocks:
        pool = search_cells(registry, block.function, limit=_POOL_SIZE)
        pool = [(cell, score) for cell, score in pool if score > 0]
        if not pool:
            rows.append(BlockCandidates(block.id, (), no_match=True))
            continue
        block_json = json.dumps(
            {
                "id": block.id,
                "function": block.function,
                "inputs": block.n_in,
                "outputs": block.n_out,
            },
            indent=2,
        )
        bundle = PromptBundle(
            system=render_prompt(
                "select_components_v1",
                block=block_json,
                candidates=_candidates_json(pool),
            ),
            user=f"Grade the candidates for block {block.id}.",
            schema_id=GRADES_SCHEMA_ID,
        )
        try:
            result = gateway.complete_structured(
                provider, bundle, GRADES_SCHEMA, policy, stage="CS"
            )
        except GatewayError as exc:
            raise ComponentSelectionFailure(
                f"grading failed for block {block.id}: {exc}"
            ) from exc
        scores = {cell.name: score for cell, score in pool}
        cells = {cell.name: cell for cell, _ in pool}
        graded = []
        for c in result.value["candidates"]:
            if c["name"] not in cells:
                continue  # hallucinated cell: drop it
            grade = c["grade"]
            cell = cells[c["name"]]
            # an exact grade must survive the mechanical checks
            if grade == "exact":
                n_in, n_out = _port_counts(cell)
                if block.n_in is not None and (n_in, n_out) != (block.n_in, block.n_out):
                    grade = "partial"
                elif not (_tokens(block.function) & _tokens(cell.docstring.functionality)):
                    grade = "partial"
            graded.append(Candidate(c["name"], grade, c.get("rationale", ""), scores[c["name"]]))
        rows.append(
            BlockCandidates(block.id, sort_candidates(graded), no_match=not graded)
        )
    table = CandidateTable(tuple(rows))
    missing = [b.block_id for b in table.blocks if b.no_match]
    if missing:
        raise ComponentSelectionFailure(
            f"no matching cells for block(s) {missing}", detail=table
        )
    return table


def build_design(
    template: PicTemplate,
    table: CandidateTable,
    registry: PdkRegistry,
    name: str = "design",
    pdk: str = "generic_cband",
) -> PicDesign:
    """Bind each block to its best-graded cell; connections come later."""
    instances = tuple(
        bind_instance(
            Instance(block.id, table.block(block.id).best().name), registry
        )
        for block in template.blocks
    )
    return PicDesign(name, pdk, instances, ())


# --- parameter configuration ------------------------------------------------------

_PARAM_ALIASES = {
    "path_length_difference": "delta_length",
    "length_difference": "delta_length",
    "arm_length_difference": "delta_length",
    "delta_length": "delta_length",
    "ring_radius": "radius",
    "bend_radius": "radius",
    "radius": "radius",
    "length": "length",
    "waveguide_width": "width",
    "width": "width",
    "gap": "gap",
    "coupling_gap": "gap",
    "coupling": "coupling",
    "coupling_ratio": "coupling",
    "grating_period": "period",
    "period": "period",
}

_UNIT_TO_UM = {"": 1.0, "um": 1.0, "µm": 1.0, "micron": 1.0, "microns": 1.0,
               "nm": 1e-3, "mm": 1e3}


def _normalize_param(name: str) -> str | None:
    key = name.strip().lower().replace(" ", "_").replace("-", "_")
    return _PARAM_ALIASES.get(key, key if key else None)


def configure_params(
    design: PicDesign,
    constraints: tuple[EntityConstraint, ...],
    registry: PdkRegistry,
) -> PicDesign:
    """Land every numeric constraint in exactly one params field per target."""
    params: dict[str, dict[str, object]] = {i.id: dict(i.params) for i in design.instances}
    for c in constraints:
        pname = _normalize_param(c.parameter)
        if pname is None:
            raise ParamConfigurationFailure(f"constraint has no parameter name: {c}")
        value: object = c.value
        if isinstance(value, (int, float)):
            unit = c.unit.strip().lower()
            if unit in _UNIT_TO_UM:
                value = float(value) * _UNIT_TO_UM[unit]
            else:
                raise ParamConfigurationFailure(
                    f"unsupported unit {c.unit!r} for parameter {c.parameter!r}"
                )
        # resolve the target: instance id, cell name, or broadcast by declaration
        ids = [i.id for i in design.instances if i.id == c.target]
        if not ids:
            ids = [i.id for i in design.instances if i.cell == c.target]
        if not ids:
            ids = [
                i.id
                for i in design.instances
                if any(p.name == pname for p in registry.get(i.cell).params)
            ]
        if not ids:
            raise ParamConfigurationFailure(
                f"constraint {c.parameter!r} matches no instance parameter"
            )
        for iid in ids:
            cell = registry.get(design.instance(iid).cell)
            if not any(p.name == pname for p in cell.params):
                if c.target:  # explicitly targeted at a cell lacking the knob
                    raise ParamConfigurationFailure(
                        f"cell {cell.name!r} has no parameter {pname!r}"
                    )
                continue
            try:
                cell.resolve_params({pname: value})
            except ParamOutOfRangeError as exc:
                raise ParamConfigurationFailure(str(exc)) from exc
            params[iid][pname] = value
    instances = tuple(
        bind_instance(
            Instance(i.id, i.cell, params[i.id], i.orientation, i.placement), registry
        )
        for i in design.instances
    )
    return PicDesign(design.name, design.pdk, instances, design.connections, design.metadata)


# --- schematic generation with self-refinement ---------------------------------------


def _instances_json(design: PicDesign, registry: PdkRegistry) -> str:
    out = []
    for inst in design.instances:
        cell = registry.get(inst.cell)
        opt = cell.optical_ports()
        out.append(
            {
                "id": inst.id,
                "cell": inst.cell,
                "west_ports": [p.name for p in opt if p.side == "west"],
                "east_ports": [p.name for p in opt if p.side == "east"],
            }
        )
    return json.dumps(out, indent=2)


def generate_schematic(
    gateway: Gateway,
    provider: str,
    design: PicDesign,
    registry: PdkRegistry,
    max_iter: int = 3,
) -> tuple[SchematicGraph, RefinementTrace]:
    """Ask for a port-level schematic, verifying and re-prompting until clean."""
    instances_json = _instances_json(design, registry)
    feedback = ""
    iterations: list[RefinementIteration] = []
    valid: list[tuple[int, SchematicGraph, int]] = []  # (crossings, graph, index)
    for i in range(max_iter):
        bundle = PromptBundle(
            system=render_prompt(
                "generate_schematic_v1", instances=instances_json, feedback=feedback
            ),
            user="Produce the port-level schematic.",
        )
        completion = gateway.complete(provider, bundle, stage="SG")
        text = completion.text
        try:
            graph = parse_dot(text)
        except (DotSyntaxError, UnknownPortFieldError) as exc:
            feedback = f"Previous attempt rejected: {exc}"
            iterations.append(RefinementIteration(text, False, (str(exc),), None, feedback))
            continue
        violations = validate_graph(graph, design, registry)
        if violations:
            msgs = tuple(f"{v.code}: {v.message}" for v in violations)
            feedback = "Previous attempt rejected: " + "; ".join(msgs)
            iterations.append(RefinementIteration(text, True, msgs, None, feedback))
            continue
        emb = layered_embedding(graph, registry)
        crossings = count_crossings(graph, emb)
        if crossings == 0:
            iterations.append(RefinementIteration(text, True, (), 0, ""))
            return graph, RefinementTrace(tuple(iterations), graph)
        feedback = (
            f"Previous attempt had {crossings} edge crossing(s); "
            "reorder the connections to remove them."
        )
        iterations.append(RefinementIteration(text, True, (), crossings, feedback))
        valid.append((crossings, graph, i))
    if valid:
        crossings, graph, _ = min(valid, key=lambda t: (t[0], t[2]))
        return graph, RefinementTrace(tuple(iterations), graph, crossings_remaining=True)
    trace = RefinementTrace(tuple(iterations), None)
    raise SchematicGenerationFailure(
        f"no valid schematic after {max_iter} iteration(s)", detail=trace
    )


def apply_connections(
    design: PicDesign, graph: SchematicGraph, registry: PdkRegistry
) -> PicDesign:
    """Copy the schematic's port-level edges onto the design netlist."""
    merged = PicDesign(
        design.name, design.pdk, design.instances, tuple(graph.edges), design.metadata
    )
    return validate_design(merged, registry)
