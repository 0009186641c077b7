from .designer import (
    apply_connections,
    build_design,
    configure_params,
    generate_schematic,
    select_components,
)
from .interpreter import (
    compose_template,
    draft_schematic,
    extract_entities,
    load_template_library,
    parse_draft,
    retrieve_templates,
)
from .prompts import load_prompt, render_prompt
from .schemas import ENTITIES_SCHEMA, ENTITIES_SCHEMA_ID, GRADES_SCHEMA, GRADES_SCHEMA_ID
from .types import (
    BlockCandidates,
    Candidate,
    CandidateTable,
    ComponentSelectionFailure,
    EntityComponent,
    EntityConstraint,
    EntityExtractionFailure,
    EntityList,
    EntityRelation,
    LayoutFailure,
    ParamConfigurationFailure,
    RefinementIteration,
    RefinementTrace,
    SchematicGenerationFailure,
    StageFailure,
)

__all__ = [
    "BlockCandidates",
    "Candidate",
    "CandidateTable",
    "ComponentSelectionFailure",
    "ENTITIES_SCHEMA",
    "ENTITIES_SCHEMA_ID",
    "EntityComponent",
    "EntityConstraint",
    "EntityExtractionFailure",
    "EntityList",
    "EntityRelation",
    "GRADES_SCHEMA",
    "GRADES_SCHEMA_ID",
    "LayoutFailure",
    "ParamConfigurationFailure",
    "RefinementIteration",
    "RefinementTrace",
    "SchematicGenerationFailure",
    "StageFailure",
    "apply_connections",
    "build_design",
    "compose_template",
    "configure_params",
    "draft_schematic",
    "extract_entities",
    "generate_schematic",
    "load_prompt",
    "load_template_library",
    "parse_draft",
    "render_prompt",
    "retrieve_templates",
    "select_components",
]
