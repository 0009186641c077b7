"""Closed JSON schemas enforced on structured model outputs."""

from __future__ import annotations

ENTITIES_SCHEMA_ID = "entities_v1"

ENTITIES_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["components"],
    "properties": {
        "components": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["label", "function"],
                "properties": {
                    "label": {"type": "string", "minLength": 1},
                    "function": {"type": "string", "minLength": 1},
                    "count": {"type": "integer", "minimum": 1},
                    "attributes": {
                        "type": "object",
                        "additionalProperties": {"type": "string"},
                    },
                },
            },
        },
        "relations": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["from", "to"],
                "properties": {
                    "from": {"type": "string"},
                    "to": {"type": "string"},
                    "relation": {"type": "string"},
                },
            },
        },
        "constraints": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["parameter", "value"],
                "properties": {
                    "parameter": {"type": "string"},
                    "value": {"type": ["number", "string"]},
                    "unit": {"type": "string"},
                    "target": {"type": "string"},
                },
            },
        },
    },
}

GRADES_SCHEMA_ID = "component_grades_v1"

GRADES_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["candidates"],
    "properties": {
        "candidates": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "grade"],
                "properties": {
                    "name": {"type": "string"},
                    "grade": {"enum": ["exact", "partial", "poor"]},
                    "rationale": {"type": "string"},
                },
            },
        }
    },
}
