"""Bundled place-and-route benchmark corpus.

Each case pairs a netlist with its schematic in DOT form plus the authored
expectation label (``routable``, ``rotation``, or ``unroutable``).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import yaml

from .dsl import PicDesign, parse_design
from .pdk import PdkRegistry
from .schematic import SchematicGraph, parse_dot


@dataclass(frozen=True)
class CorpusCase:
    name: str
    components: int
    expect: str  # routable | rotation | unroutable
    design_text: str
    dot_text: str

    def design(self, registry: PdkRegistry | None = None) -> PicDesign:
        return parse_design(self.design_text, registry=registry)

    def graph(self) -> SchematicGraph:
        return parse_dot(self.dot_text)


def load_corpus() -> tuple[CorpusCase, ...]:
    root = resources.files("picflow.data") / "corpus"
    cases = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if not entry.name.endswith(".yaml"):
            continue
        doc = yaml.safe_load(entry.read_text())
        cases.append(
            CorpusCase(
                name=doc["name"],
                components=int(doc["components"]),
                expect=doc["expect"],
                design_text=doc["design"],
                dot_text=doc["dot"],
            )
        )
    return tuple(cases)
