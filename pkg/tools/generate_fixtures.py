"""Author the bundled replay fixtures for offline end-to-end runs.

Each case scripts the exact model responses the pipeline will request, runs
the pipeline once with recording enabled, checks the outcome, and leaves the
recorded request/response pairs under src/picflow/data/fixtures/ together
with a manifest the tests read back.

Usage: python tools/generate_fixtures.py
"""

from __future__ import annotations

import hashlib
import json
import shutil
import sys
from dataclasses import dataclass
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from picflow.gateway import FixtureStore, ScriptedProvider  # noqa: E402
from picflow.pipeline import Pipeline, PipelineConfig, default_fixtures_dir  # noqa: E402

DOT_HEADER = "  rankdir=LR;\n  node [shape=record];\n"


def entities(components, constraints=(), relations=()):
    return json.dumps(
        {
            "components": list(components),
            "relations": list(relations),
            "constraints": list(constraints),
        }
    )


def grades(*names_and_grades):
    return json.dumps(
        {
            "candidates": [
                {"name": n, "grade": g, "rationale": f"{n} matches the requested function"}
                for n, g in names_and_grades
            ]
        }
    )


def node_label(nid, cell, west, east):
    w = "|".join(f"<{p}> {p}" for p in west)
    e = "|".join(f"<{p}> {p}" for p in east)
    return f'  {nid} [label="{{{{{w}}} | {nid}: {cell} | {{{e}}}}}"];\n'


def dot(name, nodes, edges):
    body = "".join(node_label(*n) for n in nodes)
    body += "".join(f"  {a} -- {b};\n" for a, b in edges)
    return f"graph {name} {{\n{DOT_HEADER}{body}}}\n"


def draft(name, nodes, edges):
    body = "".join(f'  {nid} [label="{fn}"];\n' for nid, fn in nodes)
    body += "".join(f"  {a} -- {b};\n" for a, b in edges)
    return f"graph {name} {{\n{body}}}\n"


MZI_PORTS = (("o1", "o2"), ("o3", "o4"))
STRAIGHT_PORTS = (("o1",), ("o2",))
MMI12_PORTS = (("o1",), ("o2", "o3"))


@dataclass(frozen=True)
class Case:
    id: str
    text: str
    expect: str  # outcome code the pipeline must produce
    responses: tuple[str, ...]


CASES = [
    # --- complete runs --------------------------------------------------------
    Case(
        "l1_straight_254",
        "Create a straight waveguide that is 254 micrometers long.",
        "S",
        (
            entities(
                [{"label": "straight waveguide", "function": "straight single-mode waveguide section", "count": 1}],
                [{"parameter": "length", "value": 254, "unit": "um", "target": ""}],
            ),
            draft("d", [("C1", "straight single-mode waveguide section")], []),
            grades(("straight", "exact")),
            dot("g", [("C1", "straight", *STRAIGHT_PORTS)], []),
        ),
    ),
    Case(
        "l1_mzi_heater",
        "Connect a 2x2 MZI with integrated thermal heaters on both arms.",
        "S",
        (
            entities(
                [{"label": "heater MZI", "function": "2x2 Mach-Zehnder interferometer with integrated heaters", "count": 1}],
            ),
            draft("d", [("C1", "2x2 Mach-Zehnder interferometer with integrated heaters")], []),
            grades(("mzi_2x2_heater_tin_cband", "exact")),
            dot("g", [("C1", "mzi_2x2_heater_tin_cband", *MZI_PORTS)], []),
        ),
    ),
    Case(
        "l2_mmi_chain",
        "An 1x2 MMI followed by a 2x2 MMI.",
        "S",
        (
            entities(
                [
                    {"label": "1x2 MMI", "function": "1x2 multimode interference splitter", "count": 1, "attributes": {"ports": "1x2"}},
                    {"label": "2x2 MMI", "function": "2x2 multimode interference coupler", "count": 1, "attributes": {"ports": "2x2"}},
                ],
                relations=[{"from": "1x2 MMI", "to": "2x2 MMI", "relation": "feeds"}],
            ),
            draft(
                "d",
                [
                    ("C1", "1x2 multimode interference splitter"),
                    ("C2", "2x2 multimode interference coupler"),
                ],
                [("C1", "C2")],
            ),
            grades(("mmi1x2", "exact")),
            grades(("mmi2x2", "exact"), ("directional_coupler", "partial")),
            dot(
                "g",
                [("C1", "mmi1x2", *MMI12_PORTS), ("C2", "mmi2x2", *MZI_PORTS)],
                [("C1:o2", "C2:o1"), ("C1:o3", "C2:o2")],
            ),
        ),
    ),
    Case(
        "l3_mzi_tree",
        "Three 2x2 MZIs arranged in a binary tree: the outputs of the first feed the inputs of the other two.",
        "S",
        (
            entities(
                [{"label": "2x2 MZI", "function": "2x2 Mach-Zehnder interferometer", "count": 3}],
                relations=[
                    {"from": "2x2 MZI", "to": "2x2 MZI", "relation": "tree"},
                ],
            ),
            draft(
                "d",
                [("C1", "2x2 Mach-Zehnder interferometer"),
                 ("C2", "2x2 Mach-Zehnder interferometer"),
                 ("C3", "2x2 Mach-Zehnder interferometer")],
                [("C1", "C2"), ("C1", "C3")],
            ),
            grades(("mzi_2x2", "exact")),
            grades(("mzi_2x2", "exact")),
            grades(("mzi_2x2", "exact")),
            dot(
                "g",
                [("C1", "mzi_2x2", *MZI_PORTS),
                 ("C2", "mzi_2x2", *MZI_PORTS),
                 ("C3", "mzi_2x2", *MZI_PORTS)],
                [("C1:o3", "C2:o1"), ("C1:o4", "C3:o1")],
            ),
        ),
    ),
    Case(
        "l3_test_line",
        "An edge coupler, a 500 um waveguide, and a grating coupler for insertion-loss testing.",
        "S",
        (
            entities(
                [
                    {"label": "edge coupler", "function": "inverse taper edge coupler for fiber butt coupling", "count": 1},
                    {"label": "waveguide", "function": "straight single-mode waveguide section", "count": 1},
                    {"label": "grating coupler", "function": "vertical fiber grating coupler", "count": 1},
                ],
                [{"parameter": "length", "value": 500, "unit": "um", "target": "straight"}],
            ),
            draft(
                "d",
                [("C1", "inverse taper edge coupler for fiber butt coupling"),
                 ("C2", "straight single-mode waveguide section"),
                 ("C3", "vertical fiber grating coupler")],
                [("C1", "C2"), ("C2", "C3")],
            ),
            grades(("edge_coupler", "exact")),
            grades(("straight", "exact")),
            grades(("grating_coupler", "exact")),
            dot(
                "g",
                [("C1", "edge_coupler", (), ("o1",)),
                 ("C2", "straight", *STRAIGHT_PORTS),
                 ("C3", "grating_coupler", ("o1",), ())],
                [("C1:o1", "C2:o1"), ("C2:o2", "C3:o1")],
            ),
        ),
    ),
    # --- one failure per stage --------------------------------------------------
    Case(
        "adv_extraction",
        "Please fabricate a chip.",
        "EE",
        (
            "I am not sure what you want on the chip.",
            "Could you clarify which photonic components you need?",
            "Sorry, I still cannot tell what to place on the chip.",
        ),
    ),
    Case(
        "adv_selection",
        "A femtosecond soliton microcomb generator.",
        "CS",
        (
            entities(
                [{"label": "comb generator", "function": "octave-spanning soliton microcomb source", "count": 1}],
            ),
            draft("d", [("C1", "octave-spanning soliton microcomb source")], []),
        ),
    ),
    Case(
        "adv_schematic",
        "Two straight waveguides in series.",
        "SG",
        (
            entities(
                [{"label": "waveguide", "function": "straight single-mode waveguide section", "count": 2}],
            ),
            draft(
                "d",
                [("C1", "straight single-mode waveguide section"),
                 ("C2", "straight single-mode waveguide section")],
                [("C1", "C2")],
            ),
            grades(("straight", "exact")),
            grades(("straight", "exact")),
            # each bad reply must fail differently so the refinement feedback
            # (and with it the recorded request digest) is unique per attempt
            "here is the wiring: C1 -> C2",
            dot(
                "g",
                [("C1", "straight", *STRAIGHT_PORTS), ("C2", "straight", *STRAIGHT_PORTS)],
                [("C1:o2", "C2:o9")],
            ),
            dot(
                "g",
                [("C1", "straight", *STRAIGHT_PORTS), ("C2", "straight", *STRAIGHT_PORTS)],
                [("C1:o1", "C1:o2")],
            ),
        ),
    ),
    Case(
        "adv_parameters",
        "A straight waveguide 0.01 micrometers long.",
        "PC",
        (
            entities(
                [{"label": "waveguide", "function": "straight single-mode waveguide section", "count": 1}],
                [{"parameter": "length", "value": 0.01, "unit": "um", "target": ""}],
            ),
            draft("d", [("C1", "straight single-mode waveguide section")], []),
            grades(("straight", "exact")),
            dot("g", [("C1", "straight", *STRAIGHT_PORTS)], []),
        ),
    ),
    Case(
        "adv_layout",
        "Two 2x2 MZIs joined by a crossed bus.",
        "L",
        (
            entities(
                [{"label": "2x2 MZI", "function": "2x2 Mach-Zehnder interferometer", "count": 2}],
            ),
            draft(
                "d",
                [("C1", "2x2 Mach-Zehnder interferometer"),
                 ("C2", "2x2 Mach-Zehnder interferometer")],
                [("C1", "C2")],
            ),
            grades(("mzi_2x2", "exact")),
            grades(("mzi_2x2", "exact")),
        )
        + tuple(
            dot(
                "g",
                [("C1", "mzi_2x2", *MZI_PORTS), ("C2", "mzi_2x2", *MZI_PORTS)],
                [("C1:o3", "C2:o2"), ("C1:o4", "C2:o1")],
            )
            for _ in range(3)
        ),
    ),
]


def record_alternate_selection(store: FixtureStore) -> None:
    """Schematic reply for the mmi chain with the 2x2 stage swapped to a
    directional coupler, so the step-by-step candidate picker can replay."""
    from picflow.dsl import Instance, PicDesign, bind_instance
    from picflow.gateway import Gateway
    from picflow.pdk import load_registry
    from picflow.agents import generate_schematic

    registry = load_registry()
    design = PicDesign(
        "design",
        "generic_cband",
        tuple(
            bind_instance(Instance(iid, cell), registry)
            for iid, cell in (("C1", "mmi1x2"), ("C2", "directional_coupler"))
        ),
        (),
    )
    reply = dot(
        "g",
        [("C1", "mmi1x2", *MMI12_PORTS), ("C2", "directional_coupler", *MZI_PORTS)],
        [("C1:o2", "C2:o1"), ("C1:o3", "C2:o2")],
    )
    gateway = Gateway({"replay": ScriptedProvider("replay", [reply])}, store)
    generate_schematic(gateway, "replay", design, registry)
    print("alternate-selection schematic recorded")


def main() -> int:
    dest = default_fixtures_dir()
    if dest.exists():
        shutil.rmtree(dest)
    dest.mkdir(parents=True)
    store = FixtureStore(dest)
    manifest = []
    for case in CASES:
        provider = ScriptedProvider("replay", list(case.responses))
        pipeline = Pipeline(
            {"replay": provider},
            PipelineConfig(provider="replay"),
            record_store=store,
        )
        result = pipeline.run(case.text)
        if result.outcome != case.expect:
            raise SystemExit(
                f"{case.id}: expected outcome {case.expect}, got {result.outcome}"
                f" ({result.error})"
            )
        entry = {"id": case.id, "text": case.text, "expect": case.expect}
        if result.outcome == "S":
            entry["gds_sha256"] = hashlib.sha256(result.artifacts["layout.gds"]).hexdigest()
        if case.id == "l2_mmi_chain":
            table = json.loads(result.artifacts["candidates.json"])
            names = [c["name"] for c in table["C2"]]
            assert "directional_coupler" in names, names
        manifest.append(entry)
        print(f"{case.id}: {result.outcome} ({len(case.responses)} scripted replies)")
    record_alternate_selection(store)
    (dest / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(list(dest.glob('*.json')))} fixture files to {dest}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
