"""Shared fixtures: a 5-segment corpus and a replay-fixture builder."""

import json

import pytest

from maats.gateway import ChatRequest, cache_key
from maats.parsing import parse_annotations
from maats.prompts import DEFAULT_SYSTEM_PROMPT, PromptLibrary, REVISION_INSTRUCTION
from maats.types import LanguagePair, MqmCategory, Segment

EN_DE = LanguagePair.parse("en-de")

FIVE_SEGMENTS = [
    Segment("s1", "The cat sat on the mat.", EN_DE,
            "Die Katze saß auf der Matte."),
    Segment("s2", "We provide links to where you can book the fare.", EN_DE,
            "Wir stellen Links bereit, über die Sie das Ticket buchen können."),
    Segment("s3", "Please click <Learn More> to view more information.", EN_DE,
            "Bitte klicken Sie auf <Mehr erfahren>, um weitere Informationen zu sehen."),
    Segment("s4", "I started a new shawl.", EN_DE,
            "Ich habe einen neuen Schal angefangen."),
    Segment("s5", "The literature class hatred is even worse: I love to read.", EN_DE,
            "Der Hass auf den Literaturkurs ist noch schlimmer: Ich lese gern."),
]

INITIAL_TRANSLATIONS = {
    "s1": "Die Katze saß auf der Matte.",
    "s2": "Wir bieten Links, wo Sie den Fahrpreis buchen können.",
    "s3": "Bitte klicken Sie auf &lt;Mehr erfahren&gt;, um mehr zu sehen.",
    "s4": "Ich begann einen neuen Schal.",
    "s5": "Der Literaturkurs-Hass ist noch schlimmer: Ich liebe es zu lesen.",
}

EDITED_TRANSLATIONS = {
    "s1": "Die Katze saß auf der Matte.",
    "s2": "Wir stellen Links bereit, über die Sie das Ticket buchen können.",
    "s3": "Bitte klicken Sie auf <Mehr erfahren>, um weitere Informationen zu sehen.",
    "s4": "Ich habe einen neuen Schal angefangen.",
    "s5": "Die Abneigung gegen den Literaturkurs ist noch schlimmer: Ich lese gern.",
}

NO_ERROR_REPLY = "MQM annotations:\n[Critical]: [{cat}/none] - None\n[Major]: [{cat}/none] - None\n[Minor]: [{cat}/none] - None"

# One finding per category for segment s2, echoing a terminology-critical case:
# the critical terminology finding must come first after prioritization.
S2_EVALUATOR_REPLIES = {
    MqmCategory.ACCURACY: (
        "MQM annotations:\nAccuracy Errors\n"
        "[Major]: [accuracy/mistranslation] - \"Fahrpreis buchen\" misses the booking sense."
    ),
    MqmCategory.STYLE: (
        "MQM annotations:\nStyle Errors\n"
        "[Minor]: [style/unnatural_flow] - Correct but awkward phrasing."
    ),
    MqmCategory.AUDIENCE_APPROPRIATENESS: (
        "MQM annotations:\nAudience Appropriateness Errors\n"
        "[Minor]: [audience_appropriateness/culture_specific_reference] - Unnatural for German readers."
    ),
    MqmCategory.TERMINOLOGY: (
        "MQM annotations:\nTerminology Errors\n"
        "[Critical]: [terminology/term_not_applied] - \"Fare\" not translated per glossary."
    ),
}


def evaluator_reply(segment_id: str, category: MqmCategory) -> str:
    if segment_id == "s2" and category in S2_EVALUATOR_REPLIES:
        return S2_EVALUATOR_REPLIES[category]
    return NO_ERROR_REPLY.format(cat=category.value)


class FixtureBuilder:
    """Precomputes the replay fixtures a pipeline run will need.

    Renders exactly the prompts the orchestrator renders (including parsing
    canned evaluator replies to predict the editor context) and keys each
    canned reply by request digest.
    """

    def __init__(self, model_id: str, temperature: float = 0.0,
                 system_prompt: str = DEFAULT_SYSTEM_PROMPT):
        self.model_id = model_id
        self.temperature = temperature
        self.system_prompt = system_prompt
        self.library = PromptLibrary()
        self.fixtures: dict[str, str] = {}

    def _add(self, user_prompt: str, reply: str) -> str:
        req = ChatRequest(
            model_id=self.model_id,
            system_prompt=self.system_prompt,
            user_prompt=user_prompt,
            temperature=self.temperature,
        )
        digest = cache_key(req).digest
        self.fixtures[digest] = reply
        return digest

    def add_translator(self, segment: Segment, reply: str) -> str:
        prompt = self.library.render_translator(segment.pair, segment.source_text)
        return self._add(prompt, reply)

    def add_evaluator(self, segment: Segment, category: MqmCategory,
                      draft_text: str, reply: str) -> str:
        prompt = self.library.render_evaluator(
            category, segment.pair, segment.source_text, draft_text
        )
        return self._add(prompt, reply)

    def add_refinement(self, segment: Segment, draft_text: str, reply: str) -> str:
        prompt = (
            self.library.render_single_agent(segment.source_text, draft_text, segment.pair)
            + "\n\n"
            + REVISION_INSTRUCTION
        )
        return self._add(prompt, reply)

    def add_editor(self, segment: Segment, draft_text: str,
                   evaluator_replies: dict, reply: str) -> str:
        sets = [
            parse_annotations(evaluator_replies[cat], expected_category=cat,
                              segment_id=segment.id).set
            for cat in sorted(evaluator_replies, key=lambda c: c.order)
        ]
        prompt = self.library.render_editor(segment.source_text, draft_text, sets)
        return self._add(prompt, reply)

    def script_zero_shot(self, segment: Segment) -> None:
        self.add_translator(segment, INITIAL_TRANSLATIONS[segment.id])

    def script_single_agent(self, segment: Segment, refine_reply: str | None = None) -> None:
        initial = INITIAL_TRANSLATIONS[segment.id]
        self.add_translator(segment, initial)
        if refine_reply is None:
            refine_reply = (
                "MQM annotations:\n[Minor]: [style/unnatural_flow] - Slightly stiff.\n\n"
                f"Corrected translation: {EDITED_TRANSLATIONS[segment.id]}"
            )
        self.add_refinement(segment, initial, refine_reply)

    def script_maats(self, segment: Segment, categories=None) -> None:
        categories = list(categories) if categories else list(MqmCategory)
        initial = INITIAL_TRANSLATIONS[segment.id]
        self.add_translator(segment, initial)
        replies = {cat: evaluator_reply(segment.id, cat) for cat in categories}
        for cat, reply in replies.items():
            self.add_evaluator(segment, cat, initial, reply)
        self.add_editor(
            segment, initial, replies,
            f"Final Translation: {EDITED_TRANSLATIONS[segment.id]}",
        )

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for digest, text in self.fixtures.items():
                fh.write(json.dumps({"digest": digest, "text": text}, ensure_ascii=False))
                fh.write("\n")


@pytest.fixture
def five_segments():
    return list(FIVE_SEGMENTS)


@pytest.fixture
def en_de():
    return EN_DE


DEFAULT_MODEL = "replay-model"


def write_dataset(path, segments=None) -> None:
    segments = segments or FIVE_SEGMENTS
    with open(path, "w", encoding="utf-8") as fh:
        for seg in segments:
            fh.write(json.dumps(
                {"id": seg.id, "source": seg.source_text, "reference": seg.reference_text},
                ensure_ascii=False,
            ))
            fh.write("\n")


def make_workspace(root, model_id=DEFAULT_MODEL, segments=None, **config_overrides):
    """Dataset + replay fixtures (all three approaches) + config file."""
    segments = segments or FIVE_SEGMENTS
    root.mkdir(parents=True, exist_ok=True)
    dataset = root / "dataset.jsonl"
    write_dataset(dataset, segments)

    builder = FixtureBuilder(model_id)
    for seg in segments:
        builder.script_zero_shot(seg)
        builder.script_single_agent(seg)
        builder.script_maats(seg)
    fixtures = root / "fixtures.jsonl"
    builder.write(fixtures)

    config = {
        "store_root": "store",
        "cache_path": "cache/completions.jsonl",
        "temperature": 0.0,
        "providers": {"replay": {"type": "replay", "fixtures": "fixtures.jsonl"}},
        "models": {model_id: "replay"},
    }
    config.update(config_overrides)
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=1), encoding="utf-8")
    return {
        "root": root,
        "config": config_path,
        "dataset": dataset,
        "fixtures": fixtures,
        "store_root": root / "store",
        "model": model_id,
    }
