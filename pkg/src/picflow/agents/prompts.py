"""Versioned system-prompt files rendered with runtime context."""

from __future__ import annotations

from importlib import resources
from string import Template


def load_prompt(name: str) -> str:
    """Read a raw prompt file (e.g. ``extract_entities_v1``) from the package."""
    return (resources.files("picflow") / "prompts" / f"{name}.md").read_text()


def render_prompt(name: str, **context: str) -> str:
    return Template(load_prompt(name)).safe_substitute(**context)
