"""Multi-agent MT refinement pipeline with baselines and an evaluation bench."""

__version__ = "0.1.0"

from .types import (  # noqa: F401
    AnnotationSet,
    ErrorAnnotation,
    LanguagePair,
    MqmCategory,
    Segment,
    Severity,
    TranslationDraft,
    category_from_slug,
    severity_rank,
)
