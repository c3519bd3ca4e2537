"""Parses MQM annotation replies into typed sets and serializes them back."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .types import (
    AnnotationSet,
    ErrorAnnotation,
    KNOWN_SUBCATEGORIES,
    MqmCategory,
    Severity,
    UnknownCategory,
    category_from_slug,
    severity_from_token,
    slugify,
)

logger = logging.getLogger(__name__)


class EmptyEditorOutput(ValueError):
    """Editor reply contained no usable translation text."""


@dataclass
class ParseReport:
    """Per-line accounting of one model reply.

    Every input line lands in exactly one bucket:
      * parsed   — cleanly recognized (annotation, no-error sentinel, header, blank)
      * warned   — produced an annotation (or was recognized) with a caveat
      * rejected — unrecognized, or unknown category
    so lines_parsed + len(warnings) + len(rejected_lines) == lines_total.
    """

    set: AnnotationSet
    warnings: list[tuple[int, str]] = field(default_factory=list)
    rejected_lines: list[str] = field(default_factory=list)
    lines_total: int = 0
    lines_parsed: int = 0


# severity token before the first colon, e.g. "[Critical]:", "major:", "- [Minor]:"
_SEV_LINE = re.compile(r"^(?:[-*•>]\s*)*(\[?[A-Za-z][A-Za-z \-_]*\]?)\s*:\s*(.*)$")

# "category/subcategory" with optional brackets, then optional "- explanation"
# (hyphen, en dash, or em dash all accepted as the separator)
_PATH_REST = re.compile(
    r"^\[?\s*(?P<cat>[^/\[\]]+?)\s*/\s*(?P<sub>[^\]]+?)\s*\]?\s*"
    r"(?:[-–—]\s*(?P<expl>.*))?$"
)

_HEADER = re.compile(r"^(?:[-*#>\s]*)(mqm annotations:?|[\w &]+ errors:?)\s*$", re.I)

_NO_ERROR_LINE = re.compile(r"^(none|no[\s_-]?errors?(\s+(found|detected))?)\s*\.?\s*$", re.I)


def _is_absence(text: str) -> bool:
    return bool(_NO_ERROR_LINE.match(text.strip().strip("[]").strip()))


def parse_annotations(
    raw: str,
    expected_category: MqmCategory | None = None,
    segment_id: str = "",
    draft_id: str = "",
    origin: str = "",
) -> ParseReport:
    """Parse a model reply into an AnnotationSet; never raises.

    Recognizes bracketed ("[Major]: [accuracy/addition] - ...") and prose
    ("major: accuracy/addition – ...") annotation lines, no-error sentinels,
    and the template's section headers. Lines naming a category outside the
    taxonomy are rejected; unknown subcategories and categories that differ
    from expected_category are kept with a warning.
    """
    result = AnnotationSet(segment_id=segment_id, draft_id=draft_id, raw_text=raw)
    report = ParseReport(set=result)
    lines = raw.split("\n")
    report.lines_total = len(lines)

    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or _HEADER.match(text) or _is_absence(text):
            report.lines_parsed += 1
            continue

        sev_match = _SEV_LINE.match(text)
        if not sev_match:
            report.rejected_lines.append(line)
            continue
        sev_token, rest = sev_match.groups()

        try:
            severity = severity_from_token(sev_token)
        except ValueError:
            report.rejected_lines.append(line)
            continue
        if severity is None:
            # "no-error" in the severity slot signals absence, whatever follows
            report.lines_parsed += 1
            continue
        if _is_absence(rest):
            report.lines_parsed += 1
            continue

        path_match = _PATH_REST.match(rest)
        if not path_match:
            report.rejected_lines.append(line)
            continue
        cat_text = path_match.group("cat")
        sub_text = path_match.group("sub")
        explanation = (path_match.group("expl") or "").strip()
        if _is_absence(explanation):
            # template emits "- None" under each severity when nothing was found
            report.lines_parsed += 1
            continue

        try:
            category = category_from_slug(cat_text)
        except UnknownCategory:
            report.rejected_lines.append(line)
            continue

        subcategory = slugify(sub_text)
        if not subcategory:
            report.rejected_lines.append(line)
            continue

        reasons = []
        if subcategory not in KNOWN_SUBCATEGORIES[category]:
            reasons.append(f"unknown subcategory {subcategory!r} for {category}")
        if expected_category is not None and category is not expected_category:
            reasons.append(f"category {category} differs from expected {expected_category}")

        result.annotations.append(
            ErrorAnnotation(
                category=category,
                subcategory=subcategory,
                severity=severity,
                explanation=explanation,
                origin=origin,
            )
        )
        if reasons:
            report.warnings.append((lineno, "; ".join(reasons)))
        else:
            report.lines_parsed += 1

    return report


def format_annotation_line(ann: ErrorAnnotation) -> str:
    """Canonical one-line form; newlines in the explanation fold to spaces."""
    explanation = " ".join(ann.explanation.split())
    return f"{ann.severity}: {ann.category}/{ann.subcategory} - {explanation}".rstrip()


def serialize_annotations(annotation_set: AnnotationSet) -> str:
    """Canonical text form: one line per annotation, grouped in category order.

    Annotations keep their original relative order within each category;
    an empty set serializes to "None".
    """
    if not annotation_set.annotations:
        return "None"
    lines = []
    for cat in MqmCategory:
        for ann in annotation_set.annotations:
            if ann.category is cat:
                lines.append(format_annotation_line(ann))
    return "\n".join(lines)


_EDITOR_LABELS = re.compile(
    r"^(final(\s+(revised|improved))?\s+translation|revised\s+translation|"
    r"improved\s+translation|corrected\s+translation|translation|output)\s*:\s*",
    re.I,
)

_QUOTE_PAIRS = [('"', '"'), ("'", "'"), ("“", "”"), ("«", "»")]


def _strip_code_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```") and text.endswith("```"):
        lines = text.split("\n")
        if len(lines) >= 2:
            return "\n".join(lines[1:-1]).strip()
    return text


def _strip_quotes(text: str) -> str:
    for opener, closer in _QUOTE_PAIRS:
        if len(text) >= 2 and text.startswith(opener) and text.endswith(closer):
            return text[len(opener):-len(closer)].strip()
    return text


def extract_editor_translation(raw: str) -> str:
    """Strip labels, code fences, and wrapping quotes from an editor reply.

    Raises EmptyEditorOutput when nothing remains. Multi-paragraph replies are
    returned whole but flagged in the log; the editor is instructed to emit a
    single sentence.
    """
    text = _strip_code_fences(raw)
    text = _EDITOR_LABELS.sub("", text.strip(), count=1).strip()
    text = _strip_quotes(text)
    if not text:
        raise EmptyEditorOutput("editor reply reduced to empty text")
    if re.search(r"\n\s*\n", text):
        logger.warning("editor reply has multiple paragraphs; keeping all text")
    return text


_CORRECTED_LABEL = re.compile(r"corrected\s+translation\s*:", re.I)


def extract_corrected_translation(raw: str) -> str | None:
    """Pull the revised translation out of a self-refinement reply.

    Looks for the last "Corrected translation:" label; returns None when the
    reply carries no extractable revision (callers treat that as no change).
    """
    matches = list(_CORRECTED_LABEL.finditer(raw))
    if not matches:
        return None
    tail = raw[matches[-1].end():]
    # take the first paragraph after the label
    paragraph = re.split(r"\n\s*\n", tail.strip(), maxsplit=1)[0].strip()
    if not paragraph:
        return None
    try:
        return extract_editor_translation(paragraph)
    except EmptyEditorOutput:
        return None
