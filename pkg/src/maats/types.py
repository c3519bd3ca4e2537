"""Canonical domain vocabulary: languages, segments, MQM taxonomy, annotations, drafts."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

SUPPORTED_LANGS = {"en", "de", "he", "ja", "ru", "zh", "ar"}

LANGUAGE_NAMES = {
    "en": "English",
    "de": "German",
    "he": "Hebrew",
    "ja": "Japanese",
    "ru": "Russian",
    "zh": "Chinese",
    "ar": "Arabic",
}

# Targets written without word spacing; scored with character tokenization.
CHARACTER_TOKENIZED_LANGS = {"zh", "ja"}


class UnknownCategory(ValueError):
    """Raised when a category slug matches nothing in the MQM taxonomy."""

    def __init__(self, slug: str):
        super().__init__(f"unknown MQM category: {slug!r}")
        self.slug = slug


class MqmCategory(enum.Enum):
    """The seven error dimensions, in canonical report/priority order."""

    ACCURACY = "accuracy"
    LINGUISTIC_CONVENTIONS = "linguistic_conventions"
    TERMINOLOGY = "terminology"
    STYLE = "style"
    LOCALE_CONVENTIONS = "locale_conventions"
    AUDIENCE_APPROPRIATENESS = "audience_appropriateness"
    DESIGN_AND_MARKUP = "design_and_markup"

    def __str__(self) -> str:
        return self.value

    @property
    def order(self) -> int:
        return _CATEGORY_ORDER[self]

    @property
    def display_name(self) -> str:
        return self.value.replace("_", " ").title().replace("And", "and")


_CATEGORY_ORDER = {cat: i for i, cat in enumerate(MqmCategory)}

# Slugs models emit that differ from the canonical names. "fluency" is the
# classic MQM name for the linguistic-conventions dimension and appears in
# gold data; the truncated/singular variants show up in model replies.
_CATEGORY_ALIASES = {
    "fluency": MqmCategory.LINGUISTIC_CONVENTIONS,
    "linguistic_convention": MqmCategory.LINGUISTIC_CONVENTIONS,
    "locale_convention": MqmCategory.LOCALE_CONVENTIONS,
    "locale": MqmCategory.LOCALE_CONVENTIONS,
    "audience_appropriate": MqmCategory.AUDIENCE_APPROPRIATENESS,
    "audience": MqmCategory.AUDIENCE_APPROPRIATENESS,
    "design_and_markup": MqmCategory.DESIGN_AND_MARKUP,
    "design_markup": MqmCategory.DESIGN_AND_MARKUP,
}


def slugify(text: str) -> str:
    """Normalize free text to a lowercase snake_case slug."""
    slug = re.sub(r"[\s\-/]+", "_", text.strip().lower())
    return re.sub(r"_+", "_", slug).strip("_")


def category_from_slug(slug: str) -> MqmCategory:
    """Resolve a category name or alias (case/space/&-insensitive) to the enum.

    Raises UnknownCategory if nothing in the taxonomy matches.
    """
    norm = slugify(slug.replace("&", " and "))
    for cat in MqmCategory:
        if norm == cat.value:
            return cat
    if norm in _CATEGORY_ALIASES:
        return _CATEGORY_ALIASES[norm]
    raise UnknownCategory(slug)


class Severity(enum.Enum):
    CRITICAL = "critical"
    MAJOR = "major"
    MINOR = "minor"

    def __str__(self) -> str:
        return self.value

    def __lt__(self, other: "Severity") -> bool:
        # critical > major > minor when compared by impact
        return severity_rank(self) > severity_rank(other)


def severity_rank(severity: Severity) -> int:
    """Priority rank used for edit ordering: critical=0, major=1, minor=2."""
    return _SEVERITY_RANK[severity]


_SEVERITY_RANK = {Severity.CRITICAL: 0, Severity.MAJOR: 1, Severity.MINOR: 2}

# Tokens that signal absence of an error, never a Severity.
NO_ERROR_TOKENS = {"no-error", "no_error", "none", "no error"}


def severity_from_token(token: str) -> Severity | None:
    """Parse a severity token; returns None for the no-error sentinels."""
    norm = token.strip().strip("[]").strip().lower().rstrip(".")
    if norm in NO_ERROR_TOKENS:
        return None
    for sev in Severity:
        if norm == sev.value:
            return sev
    raise ValueError(f"unknown severity token: {token!r}")


# Advisory per-category subcategory lists (models emit variants, so validation
# against these warns rather than rejects).
KNOWN_SUBCATEGORIES: dict[MqmCategory, frozenset[str]] = {
    MqmCategory.ACCURACY: frozenset(
        {"addition", "mistranslation", "mt_hallucination", "omission",
         "untranslated", "wrong_named_entity"}
    ),
    MqmCategory.TERMINOLOGY: frozenset({"term_not_applied", "wrong_term"}),
    MqmCategory.LINGUISTIC_CONVENTIONS: frozenset(
        {"agreement", "capitalization", "grammar", "punctuation", "spelling",
         "whitespace", "word_order"}
    ),
    MqmCategory.STYLE: frozenset(
        {"company_style", "do_not_translate", "inconsistency",
         "lacks_creativity", "register", "unnatural_flow"}
    ),
    MqmCategory.LOCALE_CONVENTIONS: frozenset(
        {"address_format", "currency_format", "date_time_format",
         "measurement_format", "number_format", "telephone_format"}
    ),
    MqmCategory.AUDIENCE_APPROPRIATENESS: frozenset(
        {"culture_specific_reference", "wrong_language_variety"}
    ),
    MqmCategory.DESIGN_AND_MARKUP: frozenset({"markup_tag"}),
}


@dataclass(frozen=True)
class LanguagePair:
    source: str
    target: str

    def __post_init__(self):
        if not self.source or not self.target:
            raise ValueError("language codes must be non-empty")
        if self.source == self.target:
            raise ValueError(f"source and target must differ, got {self.source!r}")

    @classmethod
    def parse(cls, spec: str, allow_any: bool = False) -> "LanguagePair":
        """Parse "en-de" style pair specs; unknown codes rejected unless allow_any."""
        parts = spec.strip().lower().replace("_", "-").split("-")
        if len(parts) != 2:
            raise ValueError(f"expected a pair like 'en-de', got {spec!r}")
        src, tgt = parts
        if not allow_any:
            for code in (src, tgt):
                if code not in SUPPORTED_LANGS:
                    raise ValueError(
                        f"unsupported language code {code!r}; "
                        f"supported: {sorted(SUPPORTED_LANGS)} (use allow_any to override)"
                    )
        return cls(src, tgt)

    @property
    def source_name(self) -> str:
        return LANGUAGE_NAMES.get(self.source, self.source)

    @property
    def target_name(self) -> str:
        return LANGUAGE_NAMES.get(self.target, self.target)

    def __str__(self) -> str:
        return f"{self.source}-{self.target}"


@dataclass(frozen=True)
class Segment:
    id: str
    source_text: str
    pair: LanguagePair
    reference_text: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("segment id must be non-empty")
        if not self.source_text.strip():
            raise ValueError(f"segment {self.id}: source_text is empty")


@dataclass(frozen=True)
class ErrorAnnotation:
    category: MqmCategory
    subcategory: str
    severity: Severity
    explanation: str = ""
    origin: str = ""

    def __post_init__(self):
        if not self.subcategory:
            raise ValueError("subcategory must be non-empty")


@dataclass
class AnnotationSet:
    """All findings one evaluator produced for one draft; empty means no-error."""

    segment_id: str
    draft_id: str
    annotations: list[ErrorAnnotation] = field(default_factory=list)
    raw_text: str = ""

    def count_by_category(self) -> dict[MqmCategory, int]:
        counts: dict[MqmCategory, int] = {}
        for ann in self.annotations:
            counts[ann.category] = counts.get(ann.category, 0) + 1
        return counts


SYSTEMS = ("zero_shot", "single_agent", "maats")
STAGES = ("initial", "refined", "final")


@dataclass(frozen=True)
class TranslationDraft:
    draft_id: str
    segment_id: str
    system: str
    stage: str
    text: str
    model_id: str
    temperature: float

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system {self.system!r}")
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if not self.text.strip():
            raise ValueError(f"draft {self.draft_id}: text is empty")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 1]")
