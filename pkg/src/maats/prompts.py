"""Prompt templates for every agent role, rendered with run-specific values."""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from .parsing import format_annotation_line
from .types import AnnotationSet, LanguagePair, MqmCategory

TEMPLATE_IDS = (
    "translator",
    "single_agent_refine",
    "evaluator_accuracy",
    "evaluator_linguistic_conventions",
    "evaluator_terminology",
    "evaluator_style",
    "evaluator_locale_conventions",
    "evaluator_audience_appropriateness",
    "evaluator_design_and_markup",
    "editor",
)

# One shared system prompt for all roles; the role-specific instructions live
# entirely in the user prompt bodies.
DEFAULT_SYSTEM_PROMPT = "You are a careful assistant for machine translation workflows."

# Appended by the orchestrator to the self-refinement prompt; the closing
# format line makes the revision extractable.
REVISION_INSTRUCTION = (
    "Please review your translation above. Identify any errors or improvements "
    "and then provide a corrected translation. End your reply with the line:\n"
    "Corrected translation: <your corrected translation>"
)


_PLACEHOLDER = re.compile(r"\{\{(\w+)\}\}")


def evaluator_template_id(category: MqmCategory) -> str:
    return f"evaluator_{category.value}"


class PromptLibrary:
    """Loads the embedded templates, optionally overlaid from a directory."""

    def __init__(self, overrides_dir: str | Path | None = None):
        self._templates: dict[str, str] = {}
        for template_id in TEMPLATE_IDS:
            self._templates[template_id] = (
                resources.files("maats.templates")
                .joinpath(f"{template_id}.txt")
                .read_text(encoding="utf-8")
            )
        if overrides_dir is not None:
            for path in sorted(Path(overrides_dir).glob("*.txt")):
                if path.stem not in TEMPLATE_IDS:
                    raise ValueError(f"override {path.name} is not a known template id")
                self._templates[path.stem] = path.read_text(encoding="utf-8")

    def template(self, template_id: str) -> str:
        return self._templates[template_id]

    def dump(self, out_dir: str | Path) -> list[Path]:
        """Write every template to out_dir, one plain-text file per id."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for template_id in TEMPLATE_IDS:
            path = out / f"{template_id}.txt"
            path.write_text(self._templates[template_id], encoding="utf-8")
            written.append(path)
        return written

    def _fill(self, template_id: str, values: dict[str, str]) -> str:
        # single-pass substitution so substituted text can never itself be
        # treated as a placeholder
        text = _PLACEHOLDER.sub(
            lambda m: values[m.group(1)] if m.group(1) in values else m.group(0),
            self._templates[template_id],
        )
        return text.rstrip("\n")

    def render_translator(self, pair: LanguagePair, source_text: str) -> str:
        if not source_text.strip():
            raise ValueError("source_text must be non-empty")
        return self._fill(
            "translator",
            {
                "source_lang": pair.source_name,
                "target_lang": pair.target_name,
                "source_text": source_text,
            },
        )

    def render_evaluator(
        self,
        category: MqmCategory,
        pair: LanguagePair,
        source_text: str,
        draft_text: str,
    ) -> str:
        return self._fill(
            evaluator_template_id(category),
            {
                "source_lang": pair.source_name,
                "target_lang": pair.target_name,
                "source_text": source_text,
                "draft_text": draft_text,
            },
        )

    def render_single_agent(
        self, source_text: str, draft_text: str, pair: LanguagePair
    ) -> str:
        if not draft_text.strip():
            raise ValueError("draft_text must be non-empty")
        return self._fill(
            "single_agent_refine",
            {
                "source_lang": pair.source_name,
                "target_lang": pair.target_name,
                "source_text": source_text,
                "draft_text": draft_text,
            },
        )

    def render_editor(
        self,
        source_text: str,
        draft_text: str,
        annotation_sets: list[AnnotationSet],
    ) -> str:
        if not annotation_sets:
            raise ValueError("at least one annotation set is required")
        return self._fill(
            "editor",
            {
                "source_text": source_text,
                "draft_text": draft_text,
                "annotations_block": editor_annotations_block(annotation_sets),
            },
        )

    def render_editor_raw(
        self, source_text: str, draft_text: str, annotations_block: str
    ) -> str:
        """Raw-passthrough variant: caller supplies the annotations block."""
        return self._fill(
            "editor",
            {
                "source_text": source_text,
                "draft_text": draft_text,
                "annotations_block": annotations_block,
            },
        )


def editor_annotations_block(annotation_sets: list[AnnotationSet]) -> str:
    """Findings grouped under per-category headers in canonical order.

    Within a category, findings keep evaluator order (set order, then order
    within the set); categories with no findings read "None".
    """
    sections = []
    for cat in MqmCategory:
        lines = [
            format_annotation_line(ann)
            for annotation_set in annotation_sets
            for ann in annotation_set.annotations
            if ann.category is cat
        ]
        body = "\n".join(lines) if lines else "None"
        sections.append(f"{cat.display_name} Errors\n{body}")
    return "\n\n".join(sections)


def extract_slot(rendered: str, before: str, after: str | None) -> str:
    """Recover a substituted slot from a rendered prompt.

    Anchors on the LAST occurrence of the marker before the slot (few-shot
    example blocks can repeat marker text earlier in the template).
    """
    start = rendered.rindex(before) + len(before)
    if after is None:
        return rendered[start:]
    end = rendered.index(after, start)
    return rendered[start:end]
