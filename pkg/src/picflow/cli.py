"""Command-line entry points: run, simulate, layout, bench, serve."""

from __future__ import annotations

import json
import os
import sys
import time
from pathlib import Path

import click
import yaml

from .bench import (
    OUTCOMES,
    PromptCase,
    TrialRecord,
    absolute_occurrence,
    attrition_report,
    collapsed_occurrence,
    conditional_occurrence,
    default_prices_path,
    default_testbench_path,
    load_prices,
    load_testbench,
    pass_at_k,
    read_log,
    run_trials,
    token_cost_table,
)
from .circuit import spectrum_to_csv, spectrum_to_json, sweep
from .dsl import parse_design
from .gateway import FixtureStore, HttpProvider, ReplayProvider
from .layout import (
    geometry_json,
    load_rules,
    place,
    rotation_search,
    route,
    run_drc,
    to_library,
)
from .gdsio import emit_gdsii
from .pdk import load_registry
from .pipeline import Pipeline, PipelineConfig, default_fixtures_dir
from .schematic import graph_from_design


def _build_pipeline(provider: str, config_path: str | None) -> Pipeline:
    """Assemble a pipeline from the optional config file and env credentials."""
    cfg: dict = {}
    if config_path:
        cfg = yaml.safe_load(Path(config_path).read_text()) or {}
    registry = load_registry(cfg["pdk"]) if cfg.get("pdk") else load_registry()
    rules = load_rules(cfg["rules"]) if cfg.get("rules") else load_rules()
    fixtures = Path(cfg.get("fixtures", default_fixtures_dir()))
    providers: dict = {"replay": ReplayProvider("replay", FixtureStore(fixtures))}
    for pid, spec in (cfg.get("providers") or {}).items():
        providers[pid] = HttpProvider(
            id=pid,
            base_url=spec["base_url"],
            api_key=os.environ.get(spec.get("api_key_env", ""), ""),
            model=spec.get("model"),
        )
    if provider not in providers:
        raise click.ClickException(
            f"provider {provider!r} is not configured; known: {sorted(providers)}"
        )
    return Pipeline(
        providers, PipelineConfig(provider=provider), registry=registry, rules=rules
    )


def _write_artifacts(out_dir: Path, artifacts: dict[str, bytes]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, payload in artifacts.items():
        (out_dir / name).write_bytes(payload)


@click.group()
def main() -> None:
    """Natural-language to verified photonic layout."""


@main.command()
@click.option("--prompt", required=True, help="Design request in natural language.")
@click.option("--step", is_flag=True, help="Pause for confirmation after each stage.")
@click.option("--provider", default="replay", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), default="picflow-out", show_default=True)
def run(prompt: str, step: bool, provider: str, config_path: str | None, out_dir: str) -> None:
    """Run the full pipeline on one prompt and write all artifacts."""
    pipeline = _build_pipeline(provider, config_path)
    out = Path(out_dir)
    if not step:
        result = pipeline.run(prompt)
        _write_artifacts(out, result.artifacts)
        click.echo(f"outcome: {result.outcome}")
        if result.error:
            click.echo(f"error: {result.error}")
        click.echo(f"artifacts: {out} ({len(result.artifacts)} files)")
        sys.exit(0 if result.outcome == "S" else 1)

    from .agents import StageFailure

    gateway = pipeline.gateway()
    try:
        interp = pipeline.interpret(gateway, prompt)
        click.echo(f"template blocks: {[b.function for b in interp.template.blocks]}")
        click.confirm("Proceed to component selection?", abort=True, default=True)
        table, design = pipeline.design_components(gateway, interp.template)
        for row in table.blocks:
            best = row.best()
            click.echo(f"{row.block_id}: {best.name} [{best.grade}]")
        click.confirm("Proceed to schematic generation?", abort=True, default=True)
        graph, _trace, design = pipeline.schematic(gateway, design)
        click.echo("\n".join(f"  {e}" for e in graph.edges) or "  (no connections)")
        click.confirm("Proceed to layout?", abort=True, default=True)
        design = pipeline.parameters(design, interp.entities)
        lay = pipeline.layout(design, graph)
        spectrum = pipeline.verify(design)
        out.mkdir(parents=True, exist_ok=True)
        (out / "layout.gds").write_bytes(emit_gdsii(lay.library))
        (out / "spectrum.csv").write_text(spectrum_to_csv(spectrum))
        click.echo(f"outcome: S — layout in {out / 'layout.gds'}")
    except StageFailure as exc:
        raise click.ClickException(f"stage {exc.code} failed: {exc}")


@main.command()
@click.option("--design", "design_path", required=True, type=click.Path(exists=True))
@click.option("--band", default="1.53:1.57:41", show_default=True,
              help="start:stop:points in micrometres.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="CSV destination (stdout when omitted); .json also written.")
def simulate(design_path: str, band: str, out_path: str | None) -> None:
    """Sweep a design's S-parameters across a wavelength band."""
    try:
        start_s, stop_s, points_s = band.split(":")
        start, stop, points = float(start_s), float(stop_s), int(points_s)
    except ValueError:
        raise click.ClickException(f"--band must be start:stop:points, got {band!r}")
    registry = load_registry()
    design = parse_design(Path(design_path).read_text(), registry)
    spectrum = sweep(design, registry, start, stop, points)
    csv_text = spectrum_to_csv(spectrum)
    if out_path:
        Path(out_path).write_text(csv_text)
        Path(out_path).with_suffix(".json").write_text(spectrum_to_json(spectrum))
        click.echo(f"wrote {out_path}")
    else:
        click.echo(csv_text, nl=False)


@main.command("layout")
@click.option("--design", "design_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--rotate", is_flag=True, help="Search instance rotations when identity fails.")
@click.option("--budget-s", default=120.0, show_default=True)
def layout_cmd(design_path: str, out_path: str, rotate: bool, budget_s: float) -> None:
    """Place, route, and emit GDSII for a connected design file."""
    registry = load_registry()
    rules = load_rules()
    design = parse_design(Path(design_path).read_text(), registry)
    graph = graph_from_design(design, registry)
    try:
        if rotate:
            result = rotation_search(design, graph, registry, rules, budget_seconds=budget_s)
            routed, orientations = result.layout, result.orientations
        else:
            placement = place(design, graph, registry, rules)
            routed = route(design, placement, registry, rules)
            orientations = {i.id: "N" for i in design.instances}
    except Exception as exc:
        raise click.ClickException(f"layout failed: {exc}")
    lib = to_library(design, routed, registry, rules)
    Path(out_path).write_bytes(emit_gdsii(lib))
    report = run_drc(design, routed, registry, rules)
    geo = Path(out_path).with_suffix(".geometry.json")
    geo.write_text(json.dumps(geometry_json(design, routed, registry)))
    click.echo(
        f"wrote {out_path}; orientations {orientations}; "
        f"DRC {'clean' if report.clean else f'{len(report.violations)} violation(s)'}"
    )


@main.group()
def bench() -> None:
    """Benchmark harness: run trials and report metrics."""


@bench.command("run")
@click.option("--testbench", "testbench_path", type=click.Path(exists=True), default=None)
@click.option("--provider", default="replay", show_default=True)
@click.option("--trials", default=5, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--log", "log_path", type=click.Path(), default="bench-log.jsonl", show_default=True)
def bench_run(testbench_path, provider, trials, config_path, log_path) -> None:
    """Run every testbench prompt several times, appending a trial log."""
    cases = load_testbench(testbench_path or default_testbench_path())
    pipeline = _build_pipeline(provider, config_path)

    def runner(case: PromptCase, trial: int) -> TrialRecord:
        result = pipeline.run(case.text)
        return TrialRecord(
            case_id=case.id,
            level=case.level,
            model=provider,
            trial=trial,
            outcome=result.outcome,
            stage_usage=result.stage_usage,
            stage_seconds=result.stage_seconds,
        )

    started = time.monotonic()
    records = run_trials(cases, runner, trials=trials, log_path=log_path)
    ok = sum(1 for r in records if r.outcome == "S")
    click.echo(
        f"{len(records)} trials in {time.monotonic() - started:.1f}s; "
        f"{ok} succeeded; log: {log_path}"
    )


def _report_rows(records) -> list[dict]:
    models = sorted({r.model for r in records})
    levels = sorted({r.level for r in records})
    rows = []
    for model in models:
        for level in levels:
            sub = [r for r in records if r.model == model and r.level == level]
            if not sub:
                continue
            row = {"model": model, "level": level, "trials": len(sub)}
            for outcome in OUTCOMES:
                row[f"abs_{outcome}"] = round(absolute_occurrence(sub, outcome), 4)
                try:
                    row[f"cond_{outcome}"] = round(conditional_occurrence(sub, outcome), 4)
                except ValueError:
                    row[f"cond_{outcome}"] = ""
            trials_per_case = {r.case_id for r in sub}
            k = len(sub) // max(len(trials_per_case), 1)
            try:
                row["pass@1"] = round(pass_at_k(sub, 1), 4)
                row[f"pass@{k}"] = round(pass_at_k(sub, k), 4)
            except ValueError:
                pass
            try:
                row["collapsed_S"] = round(collapsed_occurrence(sub, "S"), 4)
            except ValueError:
                row["collapsed_S"] = ""
            rows.append(row)
    return rows


@bench.command("report")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["md", "csv"]), default="md", show_default=True)
@click.option("--prices", "prices_path", type=click.Path(exists=True), default=None)
def bench_report(log_path: str, fmt: str, prices_path: str | None) -> None:
    """Summarize a trial log: occurrence rates, pass@k, attrition, token cost."""
    records = read_log(log_path)
    if not records:
        raise click.ClickException("log is empty")
    rows = _report_rows(records)
    keys = list(rows[0])
    if fmt == "csv":
        click.echo(",".join(keys))
        for row in rows:
            click.echo(",".join(str(row.get(k, "")) for k in keys))
    else:
        click.echo("| " + " | ".join(keys) + " |")
        click.echo("|" + "|".join(" --- " for _ in keys) + "|")
        for row in rows:
            click.echo("| " + " | ".join(str(row.get(k, "")) for k in keys) + " |")
        click.echo("")
        click.echo("Attrition (trials entering each stage):")
        for (level, model), counts in sorted(attrition_report(records).items()):
            click.echo(f"  level {level} / {model}: {counts}")
        prices = load_prices(prices_path or default_prices_path())
        try:
            for row in token_cost_table(records, prices):
                flag = "" if row.complete else " (incomplete)"
                click.echo(
                    f"  level {row.level} / {row.model}: "
                    f"{row.mean['total_tokens']:.0f} ± {row.half_width['total_tokens']:.0f} "
                    f"tokens, ${row.mean['cost']:.4f}/run{flag}"
                )
        except ValueError as exc:
            click.echo(f"  token cost table unavailable: {exc}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--provider", default="replay", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--runs-dir", default="picflow-runs", show_default=True)
def serve(host: str, port: int, provider: str, config_path: str | None, runs_dir: str) -> None:
    """Serve the run-oriented HTTP API."""
    import uvicorn

    from .service import create_app

    app = create_app(_build_pipeline(provider, config_path), runs_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
