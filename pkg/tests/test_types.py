import pytest

from maats.types import (
    LanguagePair,
    MqmCategory,
    Segment,
    Severity,
    TranslationDraft,
    UnknownCategory,
    category_from_slug,
    severity_from_token,
    severity_rank,
)


def test_severity_rank_order():
    assert severity_rank(Severity.CRITICAL) == 0
    assert severity_rank(Severity.MAJOR) == 1
    assert severity_rank(Severity.MINOR) == 2


def test_severity_rank_injective_and_consistent_with_comparison():
    ranks = {severity_rank(s) for s in Severity}
    assert len(ranks) == 3
    assert Severity.CRITICAL > Severity.MAJOR > Severity.MINOR


def test_severity_tokens():
    assert severity_from_token("[Critical]") is Severity.CRITICAL
    assert severity_from_token("major") is Severity.MAJOR
    assert severity_from_token("no-error") is None
    assert severity_from_token("None") is None
    assert severity_from_token("No error.") is None
    with pytest.raises(ValueError):
        severity_from_token("catastrophic")


def test_category_identity_mappings():
    assert category_from_slug("accuracy") is MqmCategory.ACCURACY
    for cat in MqmCategory:
        assert category_from_slug(cat.value) is cat


def test_category_aliases():
    assert category_from_slug("fluency") is MqmCategory.LINGUISTIC_CONVENTIONS
    assert category_from_slug("Locale Convention") is MqmCategory.LOCALE_CONVENTIONS
    assert category_from_slug("locale_conventions") is MqmCategory.LOCALE_CONVENTIONS
    assert category_from_slug("audience_appropriate") is MqmCategory.AUDIENCE_APPROPRIATENESS
    assert category_from_slug("Design & Markup") is MqmCategory.DESIGN_AND_MARKUP


def test_category_unknown():
    with pytest.raises(UnknownCategory):
        category_from_slug("weather")


def test_category_enum_order_is_editor_order():
    assert [c.value for c in MqmCategory] == [
        "accuracy",
        "linguistic_conventions",
        "terminology",
        "style",
        "locale_conventions",
        "audience_appropriateness",
        "design_and_markup",
    ]


def test_language_pair_parse():
    pair = LanguagePair.parse("en-de")
    assert pair.source == "en" and pair.target == "de"
    assert pair.source_name == "English" and pair.target_name == "German"
    assert str(pair) == "en-de"


def test_language_pair_rejects_same_and_unknown():
    with pytest.raises(ValueError):
        LanguagePair.parse("en-en")
    with pytest.raises(ValueError):
        LanguagePair.parse("en-xx")
    # the escape hatch admits arbitrary codes but never identical ones
    assert LanguagePair.parse("en-xx", allow_any=True).target == "xx"
    with pytest.raises(ValueError):
        LanguagePair.parse("xx-xx", allow_any=True)


def test_segment_validation():
    pair = LanguagePair.parse("en-de")
    with pytest.raises(ValueError):
        Segment(id="s1", source_text="   ", pair=pair)
    with pytest.raises(ValueError):
        Segment(id="", source_text="hi", pair=pair)


def test_draft_validation():
    kwargs = dict(draft_id="d1", segment_id="s1", model_id="m", temperature=0.0)
    with pytest.raises(ValueError):
        TranslationDraft(system="other", stage="final", text="x", **kwargs)
    with pytest.raises(ValueError):
        TranslationDraft(system="maats", stage="draft", text="x", **kwargs)
    with pytest.raises(ValueError):
        TranslationDraft(system="maats", stage="final", text="  ", **kwargs)
    kwargs["temperature"] = 1.5
    with pytest.raises(ValueError):
        TranslationDraft(system="maats", stage="final", text="x", **kwargs)
