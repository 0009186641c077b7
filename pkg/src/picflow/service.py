"""Run-oriented HTTP service wrapping the pipeline.

Each run lives in its own directory (snapshot, append-only event journal,
artifact files).  Automated runs execute every stage back to back;
step-by-step runs pause in an ``awaiting_*`` state after each reviewable
stage until the matching approve endpoint is called.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse

from .agents import StageFailure, apply_connections, build_design
from .circuit import spectrum_to_csv, spectrum_to_json
from .dsl import (
    DslError,
    Instance,
    PicDesign,
    bind_instance,
    parse_template,
    serialize_design,
    serialize_template,
)
from .gateway import Gateway
from .gdsio import emit_gdsii
from .layout import geometry_json
from .pipeline import (
    Pipeline,
    _drc_json,
    _entities_json,
    _table_json,
    _text,
    _trace_json,
)
from .schematic import DotSyntaxError, UnknownPortFieldError, emit_dot, parse_dot, validate_graph

STATES = (
    "created",
    "interpreting",
    "awaiting_template_approval",
    "designing",
    "awaiting_component_choice",
    "awaiting_schematic_approval",
    "laying_out",
    "verifying",
    "done",
    "failed",
)

TRANSITIONS = {
    "created": {"interpreting"},
    "interpreting": {"awaiting_template_approval", "designing", "failed"},
    "awaiting_template_approval": {"designing"},
    "designing": {
        "awaiting_component_choice",
        "awaiting_schematic_approval",
        "laying_out",
        "failed",
    },
    "awaiting_component_choice": {"designing"},
    "awaiting_schematic_approval": {"laying_out"},
    "laying_out": {"verifying", "failed"},
    "verifying": {"done", "failed"},
    "done": set(),
    "failed": set(),
}

TERMINAL = {"done", "failed"}

# approve endpoint stage name -> state the run must be waiting in
GATES = {
    "template": "awaiting_template_approval",
    "components": "awaiting_component_choice",
    "schematic": "awaiting_schematic_approval",
}

_CONTENT_TYPES = {
    ".gds": "application/octet-stream",
    ".json": "application/json",
    ".yaml": "text/yaml; charset=utf-8",
    ".dot": "text/vnd.graphviz; charset=utf-8",
    ".csv": "text/csv; charset=utf-8",
}


class IllegalTransition(RuntimeError):
    pass


@dataclass
class RunContext:
    id: str
    prompt: str
    mode: str  # 'automated' | 'step'
    dir: Path
    gateway: Gateway
    state: str = "created"
    outcome: str | None = None
    error: str | None = None
    phase: str = "interpret"
    seq: int = 0
    stage_seconds: dict = field(default_factory=dict)
    lock: threading.RLock = field(default_factory=threading.RLock)
    # in-memory intermediate results, only meaningful server-side
    interp: object = None
    template: object = None
    table: object = None
    design: PicDesign | None = None
    graph: object = None


class RunService:
    """Owns run directories and drives the state machine."""

    def __init__(self, pipeline: Pipeline, root: str | Path):
        self.pipeline = pipeline
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._runs: dict[str, RunContext] = {}
        self._registry_lock = threading.Lock()

    # --- run lifecycle ----------------------------------------------------

    def create(self, prompt: str, mode: str) -> RunContext:
        if not prompt.strip():
            raise HTTPException(400, "prompt must be non-empty")
        if mode not in ("automated", "step"):
            raise HTTPException(400, f"unknown mode {mode!r}")
        run_id = uuid.uuid4().hex[:12]
        ctx = RunContext(
            id=run_id,
            prompt=prompt,
            mode=mode,
            dir=self.root / run_id,
            gateway=self.pipeline.gateway(),
        )
        (ctx.dir / "artifacts").mkdir(parents=True)
        with self._registry_lock:
            self._runs[run_id] = ctx
        self._emit(ctx, "state", {"state": "created"})
        self._write_snapshot(ctx)
        threading.Thread(target=self._advance, args=(ctx,), daemon=True).start()
        return ctx

    def get(self, run_id: str) -> RunContext:
        with self._registry_lock:
            ctx = self._runs.get(run_id)
        if ctx is None:
            raise HTTPException(404, f"no run {run_id!r}")
        return ctx

    # --- events & persistence ----------------------------------------------

    def _emit(self, ctx: RunContext, kind: str, data: dict) -> None:
        with ctx.lock:
            ctx.seq += 1
            record = {"seq": ctx.seq, "event": kind, "data": data}
            with (ctx.dir / "events.jsonl").open("a") as fh:
                fh.write(json.dumps(record) + "\n")

    def events(self, ctx: RunContext) -> list[dict]:
        path = ctx.dir / "events.jsonl"
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text().splitlines()]

    def _set_state(self, ctx: RunContext, state: str) -> None:
        with ctx.lock:
            if state == ctx.state:
                return
            if state not in TRANSITIONS[ctx.state]:
                raise IllegalTransition(f"{ctx.state} -> {state}")
            if ctx.mode == "automated" and state.startswith("awaiting_"):
                raise IllegalTransition(f"automated run may not enter {state}")
            ctx.state = state
            data = {"state": state}
            if state == "failed":
                data["outcome"] = ctx.outcome
                data["error"] = ctx.error
            if state == "done":
                data["outcome"] = "S"
            self._emit(ctx, "state", data)
            self._write_snapshot(ctx)

    def _write_snapshot(self, ctx: RunContext) -> None:
        (ctx.dir / "run.json").write_text(json.dumps(self.snapshot(ctx), indent=2))

    def snapshot(self, ctx: RunContext) -> dict:
        artifacts = sorted(
            p.name for p in (ctx.dir / "artifacts").iterdir() if p.is_file()
        )
        return {
            "id": ctx.id,
            "prompt": ctx.prompt,
            "mode": ctx.mode,
            "state": ctx.state,
            "outcome": ctx.outcome,
            "error": ctx.error,
            "artifacts": artifacts,
            "stage_usage": ctx.gateway.ledger.as_dict(),
            "stage_seconds": dict(ctx.stage_seconds),
        }

    def _store(self, ctx: RunContext, name: str, payload: bytes) -> None:
        if ctx.state in TERMINAL:
            raise IllegalTransition("artifacts are immutable after completion")
        (ctx.dir / "artifacts" / name).write_bytes(payload)

    def artifact(self, ctx: RunContext, name: str) -> tuple[bytes, str]:
        path = ctx.dir / "artifacts" / name
        if "/" in name or not path.is_file():
            raise HTTPException(404, f"run {ctx.id} has no artifact {name!r}")
        media = _CONTENT_TYPES.get(path.suffix, "application/octet-stream")
        return path.read_bytes(), media

    # --- stage driver -------------------------------------------------------

    def _advance(self, ctx: RunContext) -> None:
        """Run stages until a gate (step mode), a failure, or completion."""
        pipeline = self.pipeline
        try:
            while True:
                if ctx.phase == "interpret":
                    self._set_state(ctx, "interpreting")
                    start = time.monotonic()
                    ctx.interp = pipeline.interpret(ctx.gateway, ctx.prompt)
                    ctx.stage_seconds["EE"] = time.monotonic() - start
                    ctx.template = ctx.interp.template
                    self._store(ctx, "entities.json", _text(_entities_json(ctx.interp.entities)))
                    self._store(
                        ctx,
                        "retrieval.json",
                        _text(json.dumps(list(ctx.interp.retrieval), indent=2)),
                    )
                    self._store(ctx, "draft.dot", _text(ctx.interp.draft))
                    self._store(ctx, "template.yaml", _text(serialize_template(ctx.template)))
                    self._emit(ctx, "stage", {"stage": "EE", "artifacts": [
                        "entities.json", "retrieval.json", "draft.dot", "template.yaml"]})
                    ctx.phase = "components"
                    if ctx.mode == "step":
                        self._set_state(ctx, "awaiting_template_approval")
                        return
                elif ctx.phase == "components":
                    self._set_state(ctx, "designing")
                    start = time.monotonic()
                    ctx.table, ctx.design = pipeline.design_components(ctx.gateway, ctx.template)
                    ctx.stage_seconds["CS"] = time.monotonic() - start
                    self._store(ctx, "candidates.json", _text(_table_json(ctx.table)))
                    self._store(ctx, "design.yaml", _text(serialize_design(ctx.design)))
                    self._emit(ctx, "stage", {"stage": "CS", "artifacts": [
                        "candidates.json", "design.yaml"]})
                    ctx.phase = "schematic"
                    if ctx.mode == "step":
                        self._set_state(ctx, "awaiting_component_choice")
                        return
                elif ctx.phase == "schematic":
                    if ctx.state != "designing":
                        self._set_state(ctx, "designing")
                    start = time.monotonic()
                    ctx.graph, trace, ctx.design = pipeline.schematic(ctx.gateway, ctx.design)
                    ctx.stage_seconds["SG"] = time.monotonic() - start
                    for i, it in enumerate(trace.iterations, start=1):
                        self._emit(ctx, "refinement", {
                            "iteration": i,
                            "syntax_ok": it.syntax_ok,
                            "violations": list(it.violations),
                            "crossings": it.crossings,
                        })
                    self._store(ctx, "schematic.dot", _text(emit_dot(ctx.graph)))
                    self._store(ctx, "trace.json", _text(_trace_json(trace)))
                    self._store(ctx, "design.yaml", _text(serialize_design(ctx.design)))
                    self._emit(ctx, "stage", {"stage": "SG", "artifacts": [
                        "schematic.dot", "trace.json", "design.yaml"]})
                    ctx.phase = "layout"
                    if ctx.mode == "step":
                        self._set_state(ctx, "awaiting_schematic_approval")
                        return
                elif ctx.phase == "layout":
                    self._set_state(ctx, "laying_out")
                    start = time.monotonic()
                    ctx.design = pipeline.parameters(ctx.design, ctx.interp.entities)
                    ctx.stage_seconds["PC"] = time.monotonic() - start
                    self._store(ctx, "design.yaml", _text(serialize_design(ctx.design)))
                    self._emit(ctx, "stage", {"stage": "PC", "artifacts": ["design.yaml"]})
                    start = time.monotonic()
                    lay = pipeline.layout(ctx.design, ctx.graph)
                    ctx.stage_seconds["L"] = time.monotonic() - start
                    self._store(ctx, "layout.gds", emit_gdsii(lay.library))
                    self._store(ctx, "orientations.json", _text(
                        json.dumps(dict(sorted(lay.orientations.items())), indent=2)))
                    self._store(ctx, "drc.json", _text(_drc_json(lay.drc)))
                    self._store(ctx, "geometry.json", _text(json.dumps(
                        geometry_json(ctx.design, lay.layout, pipeline.registry))))
                    self._emit(ctx, "stage", {"stage": "L", "artifacts": [
                        "layout.gds", "orientations.json", "drc.json", "geometry.json"]})
                    ctx.phase = "verify"
                elif ctx.phase == "verify":
                    self._set_state(ctx, "verifying")
                    start = time.monotonic()
                    spectrum = pipeline.verify(ctx.design)
                    ctx.stage_seconds["verify"] = time.monotonic() - start
                    self._store(ctx, "spectrum.json", _text(spectrum_to_json(spectrum)))
                    self._store(ctx, "spectrum.csv", _text(spectrum_to_csv(spectrum)))
                    self._emit(ctx, "stage", {"stage": "verify", "artifacts": [
                        "spectrum.json", "spectrum.csv"]})
                    ctx.outcome = "S"
                    self._set_state(ctx, "done")
                    return
                else:  # pragma: no cover - defensive
                    raise RuntimeError(f"unknown phase {ctx.phase}")
        except StageFailure as exc:
            ctx.outcome = exc.code
            ctx.error = str(exc)
            self._set_state(ctx, "failed")
        except DslError as exc:
            ctx.outcome = "SG"
            ctx.error = str(exc)
            self._set_state(ctx, "failed")
        except Exception as exc:  # infrastructure failure: blame the phase in flight
            ctx.outcome = {
                "interpret": "EE",
                "components": "CS",
                "schematic": "SG",
                "layout": "L",
                "verify": "L",
            }[ctx.phase]
            ctx.error = str(exc)
            self._set_state(ctx, "failed")

    # --- approvals --------------------------------------------------------------

    def approve(self, ctx: RunContext, stage: str, payload: dict | None) -> dict:
        if stage not in GATES:
            raise HTTPException(404, f"unknown stage {stage!r}")
        with ctx.lock:
            if ctx.state != GATES[stage]:
                raise HTTPException(
                    409, f"run is in state {ctx.state!r}, not {GATES[stage]!r}"
                )
            # apply the edit first; any validation error leaves state untouched
            if payload:
                if stage == "template":
                    self._edit_template(ctx, payload)
                elif stage == "components":
                    self._choose_components(ctx, payload)
                else:
                    self._edit_schematic(ctx, payload)
            self._set_state(
                ctx,
                "designing" if stage in ("template", "components") else "laying_out",
            )
        threading.Thread(target=self._advance, args=(ctx,), daemon=True).start()
        return self.snapshot(ctx)

    def _edit_template(self, ctx: RunContext, payload: dict) -> None:
        text = payload.get("template_yaml")
        if not isinstance(text, str):
            raise HTTPException(422, "payload must carry 'template_yaml'")
        try:
            template = parse_template(text)
        except DslError as exc:
            raise HTTPException(422, f"invalid template: {exc}") from exc
        ctx.template = template
        self._store(ctx, "template.yaml", _text(serialize_template(template)))
        self._emit(ctx, "edit", {"stage": "template"})

    def _choose_components(self, ctx: RunContext, payload: dict) -> None:
        selection = payload.get("selection")
        if not isinstance(selection, dict):
            raise HTTPException(422, "payload must carry a 'selection' mapping")
        chosen: dict[str, str] = {}
        for block in ctx.table.blocks:
            chosen[block.block_id] = block.best().name
        for block_id, cell_name in selection.items():
            row = next((b for b in ctx.table.blocks if b.block_id == block_id), None)
            if row is None:
                raise HTTPException(422, f"unknown block {block_id!r}")
            if cell_name not in {c.name for c in row.candidates}:
                raise HTTPException(
                    422, f"{cell_name!r} is not a graded candidate for {block_id!r}"
                )
            chosen[block_id] = cell_name
        try:
            instances = tuple(
                bind_instance(Instance(bid, cell), self.pipeline.registry)
                for bid, cell in chosen.items()
            )
        except DslError as exc:
            raise HTTPException(422, str(exc)) from exc
        ctx.design = PicDesign(ctx.design.name, ctx.design.pdk, instances, ())
        self._store(ctx, "design.yaml", _text(serialize_design(ctx.design)))
        self._emit(ctx, "edit", {"stage": "components", "selection": selection})

    def _edit_schematic(self, ctx: RunContext, payload: dict) -> None:
        text = payload.get("schematic_dot")
        if not isinstance(text, str):
            raise HTTPException(422, "payload must carry 'schematic_dot'")
        try:
            graph = parse_dot(text)
        except (DotSyntaxError, UnknownPortFieldError) as exc:
            raise HTTPException(422, f"invalid schematic: {exc}") from exc
        violations = validate_graph(graph, ctx.design, self.pipeline.registry)
        if violations:
            raise HTTPException(
                422,
                "; ".join(f"{v.code}: {v.message}" for v in violations),
            )
        try:
            ctx.design = apply_connections(ctx.design, graph, self.pipeline.registry)
        except DslError as exc:
            raise HTTPException(422, str(exc)) from exc
        ctx.graph = graph
        self._store(ctx, "schematic.dot", _text(emit_dot(graph)))
        self._store(ctx, "design.yaml", _text(serialize_design(ctx.design)))
        self._emit(ctx, "edit", {"stage": "schematic"})


# -----------------------------------------------------------------------------
# HTTP layer


def _sse(record: dict) -> str:
    return (
        f"id: {record['seq']}\n"
        f"event: {record['event']}\n"
        f"data: {json.dumps(record['data'])}\n\n"
    )


def create_app(pipeline: Pipeline, root: str | Path) -> FastAPI:
    app = FastAPI(title="picflow", version="1.0")
    service = RunService(pipeline, root)
    app.state.service = service

    @app.post("/runs", status_code=201)
    async def create_run(request: Request) -> JSONResponse:
        body = await request.json()
        if not isinstance(body, dict) or not isinstance(body.get("prompt"), str):
            raise HTTPException(400, "body must carry a string 'prompt'")
        ctx = service.create(body["prompt"], body.get("mode", "automated"))
        return JSONResponse(service.snapshot(ctx), status_code=201)

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict:
        return service.snapshot(service.get(run_id))

    @app.post("/runs/{run_id}/stages/{stage}/approve")
    async def approve(run_id: str, stage: str, request: Request) -> dict:
        ctx = service.get(run_id)
        raw = await request.body()
        payload = json.loads(raw) if raw else None
        if payload is not None and not isinstance(payload, dict):
            raise HTTPException(400, "payload must be a JSON object")
        return service.approve(ctx, stage, payload)

    @app.get("/runs/{run_id}/artifacts/{name}")
    def get_artifact(run_id: str, name: str) -> Response:
        payload, media = service.artifact(service.get(run_id), name)
        return Response(content=payload, media_type=media)

    @app.get("/runs/{run_id}/events")
    def stream_events(
        run_id: str,
        request: Request,
        last_event_id: int | None = None,
        follow: bool = True,
    ):
        ctx = service.get(run_id)
        after = last_event_id
        if after is None:
            header = request.headers.get("last-event-id")
            after = int(header) if header else 0

        def generate():
            cursor = after
            while True:
                batch = [e for e in service.events(ctx) if e["seq"] > cursor]
                for record in batch:
                    cursor = record["seq"]
                    yield _sse(record)
                if not follow and not batch:
                    return
                if ctx.state in TERMINAL and not batch:
                    remaining = [e for e in service.events(ctx) if e["seq"] > cursor]
                    for record in remaining:
                        cursor = record["seq"]
                        yield _sse(record)
                    return
                if not batch:
                    time.sleep(0.02)

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app
