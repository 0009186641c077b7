#!/usr/bin/env python3
"""Generate the bundled place-and-route benchmark corpus.

Each case is a YAML document with the design netlist, its schematic graph in
DOT form, and the author's expectation (baseline-routable, fixable by the
orientation search, or unroutable) used for eyeballing regressions — the
tests recompute actual outcomes rather than trusting the annotation.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from picflow.dsl import parse_design
from picflow.pdk import load_registry

OUT = Path(__file__).resolve().parent.parent / "src" / "picflow" / "data" / "corpus"

registry = load_registry()


def dot_for(design) -> str:
    lines = [f"graph {design.name} {{", "  rankdir=LR;", "  node [shape=record];"]
    for inst in design.instances:
        cell = registry.get(inst.cell)
        west = [p.name for p in cell.optical_ports() if p.side == "west"]
        east = [p.name for p in cell.optical_ports() if p.side == "east"]
        wf = "|".join(f"<{p}> {p}" for p in west)
        ef = "|".join(f"<{p}> {p}" for p in east)
        lines.append(f'  {inst.id} [label="{{{{{wf}}} | {inst.id}: {inst.cell} | {{{ef}}}}}"];')
    for c in design.connections:
        lines.append(f"  {c.a} -- {c.b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def design_yaml(name, instances, connections) -> str:
    doc = {
        "schema_version": 1,
        "name": name,
        "pdk": "generic_cband",
        "instances": instances,
        "connections": connections,
    }
    return yaml.safe_dump(doc, sort_keys=False)


CASES: list[tuple[str, str, str]] = []  # (name, expect, design yaml)


def add(name, expect, instances, connections):
    CASES.append((name, expect, design_yaml(name, instances, connections)))


# --- straight chains (baseline routable)
for n in (2, 3, 4, 5, 6):
    inst = [{"id": f"w{i}", "cell": "straight", "params": {"length": 20 + 10 * i}} for i in range(n)]
    conn = [f"w{i}:o2 -- w{i+1}:o1" for i in range(n - 1)]
    add(f"chain_straight_{n}", "routable", inst, conn)

# --- parallel-bus MZI cascades
for n in (2, 3, 4):
    inst = [{"id": f"m{i}", "cell": "mzi_2x2"} for i in range(n)]
    conn = []
    for i in range(n - 1):
        conn += [f"m{i}:o3 -- m{i+1}:o1", f"m{i}:o4 -- m{i+1}:o2"]
    add(f"bus_mzi_{n}", "routable", inst, conn)

# --- heater MZI cascades with couplers on both ends; the fibre couplers
#     and terminators face west by default, so these need the rotation pass
for n in (1, 2):
    inst = (
        [{"id": "in0", "cell": "grating_coupler"}]
        + [{"id": f"h{i}", "cell": "mzi_2x2_heater_tin_cband"} for i in range(n)]
        + [{"id": "out0", "cell": "grating_coupler"}, {"id": "out1", "cell": "terminator"},
           {"id": "t0", "cell": "terminator"}]
    )
    conn = ["in0:o1 -- h0:o1", "t0:o1 -- h0:o2"]
    for i in range(n - 1):
        conn += [f"h{i}:o3 -- h{i+1}:o1", f"h{i}:o4 -- h{i+1}:o2"]
    conn += [f"h{n-1}:o3 -- out0:o1", f"h{n-1}:o4 -- out1:o1"]
    add(f"heater_mzi_io_{n}", "rotation", inst, conn)

# --- binary splitter trees (depth 1..3)
for depth in (1, 2, 3):
    inst = []
    conn = []
    count = 0
    layers = [["s0"]]
    inst.append({"id": "s0", "cell": "mmi1x2"})
    for d in range(1, depth + 1):
        row = []
        for parent in layers[-1]:
            for k, port in enumerate(("o2", "o3")):
                count += 1
                nid = f"s{count}"
                row.append(nid)
                inst.append({"id": nid, "cell": "mmi1x2" if d < depth else "straight"})
                conn.append(f"{parent}:{port} -- {nid}:o1")
        layers.append(row)
    add(f"tree_split_{depth}", "routable", inst, conn)

# --- directional-coupler lattices
for n in (2, 3):
    inst = [{"id": f"d{i}", "cell": "directional_coupler"} for i in range(n)]
    conn = []
    for i in range(n - 1):
        conn += [f"d{i}:o3 -- d{i+1}:o1", f"d{i}:o4 -- d{i+1}:o2"]
    add(f"lattice_dc_{n}", "routable", inst, conn)

# --- mixed single-path circuits
add("ring_drop_line", "routable",
    [{"id": "a", "cell": "straight"}, {"id": "r", "cell": "ring_single"},
     {"id": "b", "cell": "straight"}],
    ["a:o2 -- r:o1", "r:o2 -- b:o1"])
add("phase_line", "routable",
    [{"id": "a", "cell": "straight"}, {"id": "p", "cell": "phase_modulator"},
     {"id": "b", "cell": "straight"}],
    ["a:o2 -- p:o1", "p:o2 -- b:o1"])
add("heater_line", "routable",
    [{"id": "a", "cell": "straight"}, {"id": "h", "cell": "heater_tin"},
     {"id": "b", "cell": "straight"}],
    ["a:o2 -- h:o1", "h:o2 -- b:o1"])
add("edge_to_grating", "routable",
    [{"id": "e", "cell": "edge_coupler"}, {"id": "w", "cell": "straight"},
     {"id": "g", "cell": "grating_coupler"}],
    ["e:o1 -- w:o1", "w:o2 -- g:o1"])
add("mzi1x2_fanout", "routable",
    [{"id": "m", "cell": "mzi_1x2"}, {"id": "a", "cell": "straight"},
     {"id": "b", "cell": "straight"}],
    ["m:o2 -- a:o1", "m:o3 -- b:o1"])
add("splitter_to_mzis", "rotation",
    [{"id": "s", "cell": "mmi1x2"},
     {"id": "m0", "cell": "mzi_2x2"}, {"id": "m1", "cell": "mzi_2x2"},
     {"id": "t0", "cell": "terminator"}, {"id": "t1", "cell": "terminator"}],
    ["s:o2 -- m0:o1", "s:o3 -- m1:o2", "t0:o1 -- m0:o2", "t1:o1 -- m1:o1"])
add("long_bus_mixed", "rotation",
    [{"id": "g0", "cell": "grating_coupler"}, {"id": "w0", "cell": "straight", "params": {"length": 80}},
     {"id": "mm", "cell": "mmi2x2"}, {"id": "w1", "cell": "straight"},
     {"id": "w2", "cell": "straight"}],
    ["g0:o1 -- w0:o1", "w0:o2 -- mm:o1", "mm:o3 -- w1:o1", "mm:o4 -- w2:o1"])
add("crossing_pass", "routable",
    [{"id": "a", "cell": "straight"}, {"id": "x", "cell": "crossing"},
     {"id": "b", "cell": "straight"}],
    ["a:o2 -- x:o1", "x:o3 -- b:o1"])
add("mmi_chain_3", "routable",
    [{"id": "s0", "cell": "mmi1x2"}, {"id": "s1", "cell": "mmi1x2"},
     {"id": "t", "cell": "terminator"}, {"id": "w", "cell": "straight"},
     {"id": "u", "cell": "straight"}],
    ["s0:o2 -- s1:o1", "s0:o3 -- t:o1", "s1:o2 -- w:o1", "s1:o3 -- u:o1"])
add("bezier_link", "routable",
    [{"id": "a", "cell": "bezier_curve"}, {"id": "b", "cell": "straight"}],
    ["a:o2 -- b:o1"])

# --- same-side (east-east) connections: the baseline U-turn has too little
#     vertical separation; rotating the second cell 180 degrees fixes it
for i, cell in enumerate(("straight", "heater_tin", "phase_modulator")):
    add(f"rotfix_uturn_{i}", "rotation",
        [{"id": "a", "cell": cell}, {"id": "b", "cell": cell}],
        ["a:o2 -- b:o2"])

# --- unroutable by construction: inverted parallel bus
for i, cell in enumerate(("mzi_2x2", "directional_coupler")):
    add(f"inverted_bus_{i}", "unroutable",
        [{"id": "n1", "cell": cell}, {"id": "n2", "cell": cell}],
        ["n1:o3 -- n2:o2", "n1:o4 -- n2:o1"])

# --- feedback loop: backward connection faces away from its target
add("loopback", "unroutable",
    [{"id": "m", "cell": "mzi_2x2"}, {"id": "w", "cell": "straight"}],
    ["m:o3 -- w:o1", "w:o2 -- m:o4"])


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.yaml"):
        old.unlink()
    for idx, (name, expect, dtext) in enumerate(CASES):
        design = parse_design(dtext, registry=registry)
        doc = {
            "name": name,
            "components": len(design.instances),
            "expect": expect,
            "design": dtext,
            "dot": dot_for(design),
        }
        path = OUT / f"{idx:03d}_{name}.yaml"
        path.write_text(yaml.safe_dump(doc, sort_keys=False))
    print(f"wrote {len(CASES)} cases to {OUT}")


if __name__ == "__main__":
    main()
