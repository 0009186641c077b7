"""Full-pipeline orchestration against the bundled replay fixtures."""

from __future__ import annotations

import hashlib
import json
import time

import pytest

from picflow.gateway import ScriptedProvider
from picflow.pipeline import (
    Pipeline,
    PipelineConfig,
    default_fixtures_dir,
    make_replay_pipeline,
)


@pytest.fixture(scope="module")
def manifest() -> list[dict]:
    return json.loads((default_fixtures_dir() / "manifest.json").read_text())


@pytest.fixture(scope="module")
def pipeline() -> Pipeline:
    return make_replay_pipeline(default_fixtures_dir())


def entry(manifest, case_id):
    return next(e for e in manifest if e["id"] == case_id)


def test_manifest_covers_happy_and_every_failure_stage(manifest):
    outcomes = [e["expect"] for e in manifest]
    assert outcomes.count("S") >= 5
    for code in ("EE", "CS", "SG", "PC", "L"):
        assert code in outcomes


def test_every_fixture_case_reproduces_its_outcome(manifest, pipeline):
    for e in manifest:
        result = pipeline.run(e["text"])
        assert result.outcome == e["expect"], (e["id"], result.error)


def test_successful_run_artifacts(manifest, pipeline):
    result = pipeline.run(entry(manifest, "l2_mmi_chain")["text"])
    assert result.outcome == "S" and result.error is None
    expected = {
        "entities.json",
        "retrieval.json",
        "draft.dot",
        "template.yaml",
        "candidates.json",
        "schematic.dot",
        "trace.json",
        "design.yaml",
        "layout.gds",
        "orientations.json",
        "drc.json",
        "geometry.json",
        "spectrum.json",
        "spectrum.csv",
    }
    assert expected <= set(result.artifacts)
    assert result.artifacts["layout.gds"][:2] != b""  # binary payload present


def test_replay_is_deterministic_across_runs(manifest, pipeline):
    e = entry(manifest, "l3_mzi_tree")
    hashes = {
        hashlib.sha256(pipeline.run(e["text"]).artifacts["layout.gds"]).hexdigest()
        for _ in range(3)
    }
    assert hashes == {e["gds_sha256"]}


def test_all_successes_replay_under_time_budget(manifest, pipeline):
    started = time.monotonic()
    for e in manifest:
        for _ in range(3):
            pipeline.run(e["text"])
    assert time.monotonic() - started < 120.0


def test_failed_run_stops_at_first_fatal_stage(manifest, pipeline):
    result = pipeline.run(entry(manifest, "adv_schematic")["text"])
    assert result.outcome == "SG"
    assert result.error
    # artifacts from completed stages are kept, later ones never appear
    assert "candidates.json" in result.artifacts
    assert "layout.gds" not in result.artifacts


def test_layout_failure_carries_reason(manifest, pipeline):
    result = pipeline.run(entry(manifest, "adv_layout")["text"])
    assert result.outcome == "L"
    assert "16" in result.error or "order inversion" in result.error


def test_stage_usage_and_seconds_populated(manifest, pipeline):
    result = pipeline.run(entry(manifest, "l1_straight_254")["text"])
    assert result.stage_usage["EE"]["total_tokens"] > 0
    assert result.stage_usage["CS"]["total_tokens"] > 0
    assert set(result.stage_seconds) >= {"EE", "CS", "SG", "PC", "L", "verify"}
    fields = result.record_fields()
    assert fields["outcome"] == "S"


def test_empty_prompt_fails_extraction_without_model_calls():
    provider = ScriptedProvider("replay", [])
    pipe = Pipeline({"replay": provider}, PipelineConfig(provider="replay"))
    result = pipe.run("   ")
    assert result.outcome == "EE"
    assert provider.calls == []


def test_fixture_miss_is_reported_not_raised(pipeline):
    result = pipeline.run("A prompt nobody ever recorded.")
    assert result.outcome == "EE"
    assert "fixture" in result.error


def test_geometry_export_is_viewer_ready(manifest, pipeline):
    result = pipeline.run(entry(manifest, "l2_mmi_chain")["text"])
    geo = json.loads(result.artifacts["geometry.json"])
    assert set(geo) == {"bbox", "instances", "routes", "ports"}
    assert {i["id"] for i in geo["instances"]} == {"C1", "C2"}
    x0, y0, x1, y1 = geo["bbox"]
    assert x0 < x1 and y0 < y1
    for inst in geo["instances"]:
        assert inst["polygons"] or inst["paths"]
        for poly in inst["polygons"]:
            for x, y in poly["points"]:
                assert x0 - 1e-6 <= x <= x1 + 1e-6
    assert len(geo["routes"]) == 2
    assert all(len(r["points"]) >= 2 for r in geo["routes"])
    assert "C1:o1" in geo["ports"]
