"""HTTP service: state machine, approvals, artifacts, event stream."""

from __future__ import annotations

import json
import random
import time

import pytest
import yaml
from fastapi.testclient import TestClient

from picflow.pipeline import default_fixtures_dir, make_replay_pipeline
from picflow.service import GATES, TRANSITIONS, create_app

HAPPY = "Create a straight waveguide that is 254 micrometers long."
CHAIN = "An 1x2 MMI followed by a 2x2 MMI."
FAIL_EE = "Please fabricate a chip."


@pytest.fixture()
def client(tmp_path) -> TestClient:
    app = create_app(make_replay_pipeline(default_fixtures_dir()), tmp_path / "runs")
    with TestClient(app) as c:
        yield c


def wait_for(client, run_id, states, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        snap = client.get(f"/runs/{run_id}").json()
        if snap["state"] in states:
            return snap
        time.sleep(0.01)
    raise AssertionError(f"run stuck in {snap['state']!r}")


def start(client, prompt, mode="automated"):
    r = client.post("/runs", json={"prompt": prompt, "mode": mode})
    assert r.status_code == 201
    return r.json()["id"]


def parse_sse(text):
    events = []
    for block in text.strip().split("\n\n"):
        fields = dict(line.split(": ", 1) for line in block.splitlines())
        events.append(
            {"id": int(fields["id"]), "event": fields["event"], "data": json.loads(fields["data"])}
        )
    return events


# --- creation & snapshots -----------------------------------------------------


def test_create_returns_id_and_journal_starts_created(client):
    run_id = start(client, HAPPY)
    snap = wait_for(client, run_id, {"done"})
    with client.stream("GET", f"/runs/{run_id}/events") as resp:
        events = parse_sse("".join(resp.iter_text()))
    assert events[0]["data"] == {"state": "created"}
    assert snap["outcome"] == "S"


def test_empty_prompt_rejected(client):
    assert client.post("/runs", json={"prompt": "   "}).status_code == 400
    assert client.post("/runs", json={"no_prompt": 1}).status_code == 400


def test_unknown_run_and_artifact_are_not_found(client):
    assert client.get("/runs/nope").status_code == 404
    run_id = start(client, HAPPY)
    wait_for(client, run_id, {"done"})
    assert client.get(f"/runs/{run_id}/artifacts/nope.gds").status_code == 404


def test_finished_run_serves_typed_artifacts(client):
    run_id = start(client, HAPPY)
    snap = wait_for(client, run_id, {"done"})
    assert "layout.gds" in snap["artifacts"] and "spectrum.json" in snap["artifacts"]
    gds = client.get(f"/runs/{run_id}/artifacts/layout.gds")
    assert gds.headers["content-type"] == "application/octet-stream"
    assert len(gds.content) > 0 and gds.content[:4] != b"{"
    spec = client.get(f"/runs/{run_id}/artifacts/spectrum.json")
    assert "application/json" in spec.headers["content-type"]
    json.loads(spec.content)
    tmpl = client.get(f"/runs/{run_id}/artifacts/template.yaml")
    assert "yaml" in tmpl.headers["content-type"]


def test_snapshot_carries_per_stage_usage(client):
    run_id = start(client, HAPPY)
    snap = wait_for(client, run_id, {"done"})
    assert snap["stage_usage"]["EE"]["total_tokens"] > 0
    assert snap["stage_seconds"]["L"] >= 0


def test_failed_run_carries_one_outcome_code(client):
    run_id = start(client, FAIL_EE)
    snap = wait_for(client, run_id, {"failed"})
    assert snap["outcome"] == "EE"
    assert snap["error"]


# --- state machine -------------------------------------------------------------


def journal_states(client, run_id):
    with client.stream("GET", f"/runs/{run_id}/events") as resp:
        events = parse_sse("".join(resp.iter_text()))
    return [e["data"]["state"] for e in events if e["event"] == "state"]


def assert_declared_transitions(states):
    for a, b in zip(states, states[1:]):
        assert b in TRANSITIONS[a], f"undeclared transition {a} -> {b}"


def test_automated_run_never_waits(client):
    run_id = start(client, CHAIN)
    wait_for(client, run_id, {"done"})
    states = journal_states(client, run_id)
    assert not any(s.startswith("awaiting_") for s in states)
    assert_declared_transitions(states)
    assert states[0] == "created" and states[-1] == "done"


def test_step_run_walks_every_gate(client):
    run_id = start(client, CHAIN, mode="step")
    wait_for(client, run_id, {"awaiting_template_approval"})
    assert client.post(f"/runs/{run_id}/stages/template/approve").status_code == 200
    wait_for(client, run_id, {"awaiting_component_choice"})
    assert client.post(f"/runs/{run_id}/stages/components/approve").status_code == 200
    wait_for(client, run_id, {"awaiting_schematic_approval"})
    assert client.post(f"/runs/{run_id}/stages/schematic/approve").status_code == 200
    snap = wait_for(client, run_id, {"done", "failed"})
    assert snap["state"] == "done"
    states = journal_states(client, run_id)
    assert_declared_transitions(states)
    assert [s for s in states if s.startswith("awaiting_")] == [
        "awaiting_template_approval",
        "awaiting_component_choice",
        "awaiting_schematic_approval",
    ]


def test_approve_in_wrong_state_conflicts(client):
    run_id = start(client, HAPPY)
    wait_for(client, run_id, {"done"})
    for stage in GATES:
        r = client.post(f"/runs/{run_id}/stages/{stage}/approve")
        assert r.status_code == 409
    assert client.get(f"/runs/{run_id}").json()["state"] == "done"


def test_unknown_stage_is_not_found(client):
    run_id = start(client, CHAIN, mode="step")
    wait_for(client, run_id, {"awaiting_template_approval"})
    assert client.post(f"/runs/{run_id}/stages/fabrication/approve").status_code == 404


def drive_to_completion(client, run_id, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        state = client.get(f"/runs/{run_id}").json()["state"]
        if state in ("done", "failed"):
            return
        for stage, gate in GATES.items():
            if state == gate:
                client.post(f"/runs/{run_id}/stages/{stage}/approve")
        time.sleep(0.01)
    raise AssertionError("run never finished")


def test_random_endpoint_sequences_stay_declared(client):
    rng = random.Random(7)
    run_ids = [
        start(client, CHAIN, mode=rng.choice(["automated", "step"])) for _ in range(4)
    ]
    endpoints = ["template", "components", "schematic"]
    for _ in range(60):
        rid = rng.choice(run_ids)
        client.post(f"/runs/{rid}/stages/{rng.choice(endpoints)}/approve")
        time.sleep(0.005)
    for rid in run_ids:
        drive_to_completion(client, rid)
        assert_declared_transitions(journal_states(client, rid))


# --- approval payloads -----------------------------------------------------------


def test_template_edit_is_revalidated(client):
    run_id = start(client, CHAIN, mode="step")
    wait_for(client, run_id, {"awaiting_template_approval"})
    bad = client.post(
        f"/runs/{run_id}/stages/template/approve",
        json={"template_yaml": "schema_version: 1\nname: broken\n"},
    )
    assert bad.status_code == 422
    assert client.get(f"/runs/{run_id}").json()["state"] == "awaiting_template_approval"

    current = client.get(f"/runs/{run_id}/artifacts/template.yaml").text
    doc = yaml.safe_load(current)
    r = client.post(
        f"/runs/{run_id}/stages/template/approve",
        json={"template_yaml": yaml.safe_dump(doc)},
    )
    assert r.status_code == 200
    wait_for(client, run_id, {"awaiting_component_choice"})


def test_candidate_selection_rebuilds_design(client):
    run_id = start(client, CHAIN, mode="step")
    wait_for(client, run_id, {"awaiting_template_approval"})
    client.post(f"/runs/{run_id}/stages/template/approve")
    wait_for(client, run_id, {"awaiting_component_choice"})

    table = json.loads(client.get(f"/runs/{run_id}/artifacts/candidates.json").content)
    names = [c["name"] for c in table["C2"]]
    assert "directional_coupler" in names  # a genuine second-ranked option

    bogus = client.post(
        f"/runs/{run_id}/stages/components/approve",
        json={"selection": {"C2": "not_a_cell"}},
    )
    assert bogus.status_code == 422
    assert client.get(f"/runs/{run_id}").json()["state"] == "awaiting_component_choice"

    r = client.post(
        f"/runs/{run_id}/stages/components/approve",
        json={"selection": {"C2": "directional_coupler"}},
    )
    assert r.status_code == 200
    wait_for(client, run_id, {"awaiting_schematic_approval"})
    design = yaml.safe_load(client.get(f"/runs/{run_id}/artifacts/design.yaml").content)
    cells = {i["id"]: i["cell"] for i in design["instances"]}
    assert cells["C2"] == "directional_coupler"
    client.post(f"/runs/{run_id}/stages/schematic/approve")
    snap = wait_for(client, run_id, {"done", "failed"})
    assert snap["state"] == "done"


def test_schematic_edit_failing_validation_leaves_state(client):
    run_id = start(client, CHAIN, mode="step")
    wait_for(client, run_id, {"awaiting_template_approval"})
    client.post(f"/runs/{run_id}/stages/template/approve")
    wait_for(client, run_id, {"awaiting_component_choice"})
    client.post(f"/runs/{run_id}/stages/components/approve")
    wait_for(client, run_id, {"awaiting_schematic_approval"})

    current = client.get(f"/runs/{run_id}/artifacts/schematic.dot").text
    contaminated = current.replace("C1:o2 -- C2:o1;", "C1:o2 -- C9:o1;")
    r = client.post(
        f"/runs/{run_id}/stages/schematic/approve",
        json={"schematic_dot": contaminated},
    )
    assert r.status_code == 422
    assert client.get(f"/runs/{run_id}").json()["state"] == "awaiting_schematic_approval"

    ok = client.post(
        f"/runs/{run_id}/stages/schematic/approve", json={"schematic_dot": current}
    )
    assert ok.status_code == 200
    assert wait_for(client, run_id, {"done", "failed"})["state"] == "done"


def test_artifacts_immutable_after_done(client):
    run_id = start(client, HAPPY)
    wait_for(client, run_id, {"done"})
    before = client.get(f"/runs/{run_id}/artifacts/layout.gds").content
    for stage in GATES:
        client.post(f"/runs/{run_id}/stages/{stage}/approve", json={"selection": {}})
    assert client.get(f"/runs/{run_id}/artifacts/layout.gds").content == before


# --- event stream -----------------------------------------------------------------


def test_events_are_strictly_ordered_and_terminal(client):
    run_id = start(client, HAPPY)
    wait_for(client, run_id, {"done"})
    with client.stream("GET", f"/runs/{run_id}/events") as resp:
        events = parse_sse("".join(resp.iter_text()))
    seqs = [e["id"] for e in events]
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)
    assert events[-1]["event"] == "state"
    assert events[-1]["data"]["state"] == "done"
    assert events[-1]["data"]["outcome"] == "S"


def test_failed_run_terminal_event_carries_code(client):
    run_id = start(client, FAIL_EE)
    wait_for(client, run_id, {"failed"})
    with client.stream("GET", f"/runs/{run_id}/events") as resp:
        events = parse_sse("".join(resp.iter_text()))
    assert events[-1]["data"] == {
        "state": "failed",
        "outcome": "EE",
        "error": events[-1]["data"]["error"],
    }


def test_reconnect_with_last_event_id_never_duplicates_or_skips(client):
    run_id = start(client, CHAIN)
    wait_for(client, run_id, {"done"})
    with client.stream("GET", f"/runs/{run_id}/events") as resp:
        full = parse_sse("".join(resp.iter_text()))
    cut = len(full) // 2
    last_seen = full[cut - 1]["id"]
    with client.stream(
        "GET", f"/runs/{run_id}/events", headers={"Last-Event-ID": str(last_seen)}
    ) as resp:
        resumed = parse_sse("".join(resp.iter_text()))
    assert [e["id"] for e in resumed] == [e["id"] for e in full[cut:]]
    assert resumed == full[cut:]


def test_reconnect_mid_run_sees_complete_sequence(client):
    """Reconnecting at every approval gate never duplicates or skips events."""
    run_id = start(client, CHAIN, mode="step")
    collected = []
    cursor = 0

    def catch_up():
        nonlocal cursor
        with client.stream(
            "GET", f"/runs/{run_id}/events?follow=false&last_event_id={cursor}"
        ) as resp:
            text = "".join(resp.iter_text())
        if text.strip():
            batch = parse_sse(text)
            collected.extend(batch)
            cursor = batch[-1]["id"]

    for stage, gate in (
        ("template", "awaiting_template_approval"),
        ("components", "awaiting_component_choice"),
        ("schematic", "awaiting_schematic_approval"),
    ):
        wait_for(client, run_id, {gate})
        catch_up()
        assert client.post(f"/runs/{run_id}/stages/{stage}/approve").status_code == 200
    wait_for(client, run_id, {"done"})
    catch_up()

    ids = [e["id"] for e in collected]
    assert ids == list(range(1, len(ids) + 1))
    with client.stream("GET", f"/runs/{run_id}/events") as resp:
        full = parse_sse("".join(resp.iter_text()))
    assert collected == full
