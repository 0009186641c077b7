"""Shared value types and failure codes for the prompt-driven stages."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..schematic import SchematicGraph


class StageFailure(Exception):
    """A pipeline stage failed; ``code`` names the stage for outcome labeling."""

    code = "?"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.detail = detail


class EntityExtractionFailure(StageFailure):
    code = "EE"


class ComponentSelectionFailure(StageFailure):
    code = "CS"


class SchematicGenerationFailure(StageFailure):
    code = "SG"


class ParamConfigurationFailure(StageFailure):
    code = "PC"


class LayoutFailure(StageFailure):
    code = "L"


@dataclass(frozen=True)
class EntityComponent:
    label: str
    function: str
    count: int = 1
    attributes: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class EntityRelation:
    src: str
    dst: str
    relation: str = ""


@dataclass(frozen=True)
class EntityConstraint:
    parameter: str
    value: float | str
    unit: str = ""
    target: str = ""


@dataclass(frozen=True)
class EntityList:
    components: tuple[EntityComponent, ...]
    relations: tuple[EntityRelation, ...] = ()
    constraints: tuple[EntityConstraint, ...] = ()

    def __post_init__(self):
        labels = [c.label for c in self.components]
        if len(set(labels)) != len(labels):
            raise EntityExtractionFailure(f"duplicate component labels in {labels}")
        if any(c.count < 1 for c in self.components):
            raise EntityExtractionFailure("component counts must be at least 1")
        known = set(labels)
        for r in self.relations:
            for end in (r.src, r.dst):
                if end not in known:
                    raise EntityExtractionFailure(
                        f"relation endpoint {end!r} is not a listed component"
                    )


@dataclass(frozen=True)
class Candidate:
    name: str
    grade: str  # exact | partial | poor
    rationale: str = ""
    score: float = 0.0  # registry search score, used for tie-breaking


@dataclass(frozen=True)
class BlockCandidates:
    block_id: str
    candidates: tuple[Candidate, ...]
    no_match: bool = False

    def best(self) -> Candidate:
        return self.candidates[0]


@dataclass(frozen=True)
class CandidateTable:
    blocks: tuple[BlockCandidates, ...]

    def block(self, block_id: str) -> BlockCandidates:
        for b in self.blocks:
            if b.block_id == block_id:
                return b
        raise KeyError(block_id)


@dataclass(frozen=True)
class RefinementIteration:
    text: str
    syntax_ok: bool
    violations: tuple[str, ...]
    crossings: int | None  # None when the graph never parsed/validated
    feedback: str  # error context fed to the next attempt ('' on the last)


@dataclass(frozen=True)
class RefinementTrace:
    iterations: tuple[RefinementIteration, ...]
    final: SchematicGraph | None
    crossings_remaining: bool = False


def grade_rank(grade: str) -> int:
    return {"exact": 0, "partial": 1, "poor": 2}[grade]


def sort_candidates(cands: Sequence[Candidate]) -> tuple[Candidate, ...]:
    return tuple(sorted(cands, key=lambda c: (grade_rank(c.grade), -c.score, c.name)))
