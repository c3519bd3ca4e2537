"""Executes the three translation approaches over segments."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .gateway import ChatRequest, ChatResponse, Gateway, GatewayError, cache_key
from .parsing import (
    ParseReport,
    extract_corrected_translation,
    extract_editor_translation,
    parse_annotations,
)
from .prompts import DEFAULT_SYSTEM_PROMPT, PromptLibrary, REVISION_INSTRUCTION
from .types import (
    AnnotationSet,
    ErrorAnnotation,
    MqmCategory,
    Segment,
    Severity,
    TranslationDraft,
    severity_rank,
)

logger = logging.getLogger(__name__)

APPROACHES = ("zero_shot", "single_agent", "maats")


@dataclass
class MaatsResult:
    initial: TranslationDraft
    annotation_sets: dict[MqmCategory, AnnotationSet]
    prioritized: list[ErrorAnnotation]
    final: TranslationDraft
    transcript: list[tuple[str, ChatResponse]]
    evaluator_errors: dict[MqmCategory, str] = field(default_factory=dict)


@dataclass
class SingleAgentResult:
    initial: TranslationDraft
    self_annotation_raw: str
    final: TranslationDraft
    fell_back: bool
    transcript: list[tuple[str, ChatResponse]]
    parse_report: ParseReport | None = None


@dataclass
class SegmentOutcome:
    """Uniform view of one segment run, used for record persistence."""

    segment_id: str
    system: str
    drafts: list[TranslationDraft]
    final_text: str
    annotation_sets: list[AnnotationSet]
    transcript_digests: list[str]
    fell_back: bool | None = None
    prioritized: list[ErrorAnnotation] = field(default_factory=list)


def prioritize(sets: list[AnnotationSet]) -> list[ErrorAnnotation]:
    """Order findings for the editor: severity first, then category, stable.

    Returns a permutation of the union of the sets' annotations; never drops
    or merges findings (conflict resolution is the editor model's job).
    """
    union = [ann for annotation_set in sets for ann in annotation_set.annotations]
    return sorted(union, key=lambda a: (severity_rank(a.severity), a.category.order))


def _estimate_tokens(text: str) -> int:
    # crude length proxy; only used for the context-budget warning
    return max(len(text) // 4, len(text.split()))


class Orchestrator:
    def __init__(
        self,
        gateway: Gateway,
        prompt_library: PromptLibrary | None = None,
        temperature: float = 0.0,
        max_output_tokens: int = 2048,
        evaluator_concurrency: int = 4,
        strict: bool = False,
        raw_annotations_to_editor: bool = False,
        editor_token_budget: int = 1000,
        system_prompt: str = DEFAULT_SYSTEM_PROMPT,
    ):
        self.gateway = gateway
        self.library = prompt_library or PromptLibrary()
        self.temperature = temperature
        self.max_output_tokens = max_output_tokens
        self.evaluator_concurrency = max(1, evaluator_concurrency)
        self.strict = strict
        self.raw_annotations_to_editor = raw_annotations_to_editor
        self.editor_token_budget = editor_token_budget
        self.system_prompt = system_prompt

    # -- internals ---------------------------------------------------------

    def _request(self, model_id: str, user_prompt: str) -> ChatRequest:
        return ChatRequest(
            model_id=model_id,
            system_prompt=self.system_prompt,
            user_prompt=user_prompt,
            temperature=self.temperature,
            max_output_tokens=self.max_output_tokens,
        )

    def _call(self, segment: Segment, req: ChatRequest) -> tuple[str, ChatResponse]:
        try:
            resp = self.gateway.complete(req)
        except GatewayError as exc:
            exc.segment_id = segment.id
            raise
        return cache_key(req).digest, resp

    def _draft(self, segment: Segment, system: str, stage: str, text: str,
               model_id: str) -> TranslationDraft:
        return TranslationDraft(
            draft_id=f"{segment.id}/{system}/{stage}",
            segment_id=segment.id,
            system=system,
            stage=stage,
            text=text,
            model_id=model_id,
            temperature=self.temperature,
        )

    def _translate(self, segment: Segment, model_id: str, system: str, stage: str,
                   transcript: list) -> TranslationDraft:
        prompt = self.library.render_translator(segment.pair, segment.source_text)
        digest, resp = self._call(segment, self._request(model_id, prompt))
        transcript.append((digest, resp))
        return self._draft(segment, system, stage, resp.text.strip(), model_id)

    # -- approaches --------------------------------------------------------

    def run_zero_shot(self, segment: Segment, model_id: str) -> TranslationDraft:
        """Direct translation: exactly one model call."""
        draft, _ = self._zero_shot(segment, model_id)
        return draft

    def _zero_shot(self, segment: Segment, model_id: str):
        transcript: list = []
        draft = self._translate(segment, model_id, "zero_shot", "final", transcript)
        return draft, transcript

    def run_single_agent(self, segment: Segment, model_id: str) -> SingleAgentResult:
        """Translate, then one self-refinement pass; exactly two model calls.

        Falls back to the initial draft when the refinement reply is a refusal
        or carries no changed translation.
        """
        transcript: list = []
        initial = self._translate(segment, model_id, "single_agent", "initial", transcript)

        refine_prompt = (
            self.library.render_single_agent(segment.source_text, initial.text, segment.pair)
            + "\n\n"
            + REVISION_INSTRUCTION
        )
        digest, resp = self._call(segment, self._request(model_id, refine_prompt))
        transcript.append((digest, resp))

        report = parse_annotations(
            resp.text, segment_id=segment.id, draft_id=initial.draft_id, origin=model_id
        )

        revised = None if resp.refusal else extract_corrected_translation(resp.text)
        fell_back = revised is None or revised == initial.text
        final_text = initial.text if fell_back else revised
        final = self._draft(segment, "single_agent", "final", final_text, model_id)
        return SingleAgentResult(
            initial=initial,
            self_annotation_raw=resp.text,
            final=final,
            fell_back=fell_back,
            transcript=transcript,
            parse_report=report,
        )

    def run_maats(
        self,
        segment: Segment,
        model_id: str,
        categories: list[MqmCategory] | None = None,
    ) -> MaatsResult:
        """Translator, one evaluator per category, then the editor.

        Exactly 2 + len(categories) model calls: the evaluators fan out
        concurrently but there is no iterative feedback loop. A failed
        evaluator degrades to an empty annotation set unless strict mode is
        on; an editor failure aborts the segment.
        """
        categories = list(categories) if categories else list(MqmCategory)
        if len(set(categories)) != len(categories):
            raise ValueError("categories must be unique")
        if not categories:
            raise ValueError("categories must be non-empty")
        # results are keyed to canonical category order no matter how the
        # caller listed them or how the fan-out completed
        categories.sort(key=lambda c: c.order)

        transcript: list = []
        initial = self._translate(segment, model_id, "maats", "initial", transcript)

        evaluations = self._fan_out(segment, model_id, initial, categories)
        annotation_sets: dict[MqmCategory, AnnotationSet] = {}
        evaluator_errors: dict[MqmCategory, str] = {}
        for cat in categories:  # reassemble in request order however the calls finished
            digest, resp, report, error = evaluations[cat]
            if error is not None:
                evaluator_errors[cat] = error
                annotation_sets[cat] = AnnotationSet(
                    segment_id=segment.id, draft_id=initial.draft_id, raw_text=""
                )
                continue
            transcript.append((digest, resp))
            annotation_sets[cat] = report.set

        ordered_sets = [annotation_sets[c] for c in categories]
        prioritized = prioritize(ordered_sets)

        editor_prompt = self._editor_prompt(segment, initial, categories, annotation_sets)
        budget = _estimate_tokens(editor_prompt)
        if budget > self.editor_token_budget:
            logger.warning(
                "segment %s: editor context ~%d tokens exceeds budget %d",
                segment.id, budget, self.editor_token_budget,
            )

        digest, resp = self._call(segment, self._request(model_id, editor_prompt))
        transcript.append((digest, resp))
        try:
            final_text = extract_editor_translation(resp.text)
        except Exception as exc:
            exc.segment_id = segment.id
            raise

        final = self._draft(segment, "maats", "final", final_text, model_id)
        return MaatsResult(
            initial=initial,
            annotation_sets=annotation_sets,
            prioritized=prioritized,
            final=final,
            transcript=transcript,
            evaluator_errors=evaluator_errors,
        )

    def _fan_out(self, segment, model_id, initial, categories):
        def evaluate(cat: MqmCategory):
            prompt = self.library.render_evaluator(
                cat, segment.pair, segment.source_text, initial.text
            )
            try:
                digest, resp = self._call(segment, self._request(model_id, prompt))
            except GatewayError as exc:
                if self.strict:
                    raise
                logger.warning("segment %s: evaluator %s failed: %s", segment.id, cat, exc)
                return cat, (None, None, None, str(exc))
            report = parse_annotations(
                resp.text,
                expected_category=cat,
                segment_id=segment.id,
                draft_id=initial.draft_id,
                origin=f"{model_id}/{cat}",
            )
            return cat, (digest, resp, report, None)

        if self.evaluator_concurrency == 1 or len(categories) == 1:
            return dict(evaluate(cat) for cat in categories)
        with ThreadPoolExecutor(max_workers=self.evaluator_concurrency) as pool:
            return dict(pool.map(evaluate, categories))

    def _editor_prompt(self, segment, initial, categories, annotation_sets):
        sets = [annotation_sets[c] for c in categories]
        if not self.raw_annotations_to_editor:
            return self.library.render_editor(segment.source_text, initial.text, sets)
        # raw passthrough mode: feed unparsed evaluator replies instead of
        # normalized annotations
        blocks = []
        for cat in MqmCategory:
            if cat not in annotation_sets:
                continue
            raw = annotation_sets[cat].raw_text.strip() or "None"
            blocks.append(f"{cat.display_name} Errors\n{raw}")
        return self.library.render_editor_raw(
            segment.source_text, initial.text, "\n\n".join(blocks)
        )

    # -- uniform entry point for persistence --------------------------------

    def run_segment(
        self,
        segment: Segment,
        model_id: str,
        approach: str,
        categories: list[MqmCategory] | None = None,
    ) -> SegmentOutcome:
        if approach == "zero_shot":
            draft, transcript = self._zero_shot(segment, model_id)
            return SegmentOutcome(
                segment_id=segment.id,
                system="zero_shot",
                drafts=[draft],
                final_text=draft.text,
                annotation_sets=[],
                transcript_digests=[d for d, _ in transcript],
            )
        if approach == "single_agent":
            result = self.run_single_agent(segment, model_id)
            return SegmentOutcome(
                segment_id=segment.id,
                system="single_agent",
                drafts=[result.initial, result.final],
                final_text=result.final.text,
                annotation_sets=[result.parse_report.set],
                transcript_digests=[d for d, _ in result.transcript],
                fell_back=result.fell_back,
            )
        if approach == "maats":
            result = self.run_maats(segment, model_id, categories)
            return SegmentOutcome(
                segment_id=segment.id,
                system="maats",
                drafts=[result.initial, result.final],
                final_text=result.final.text,
                annotation_sets=list(result.annotation_sets.values()),
                transcript_digests=[d for d, _ in result.transcript],
                prioritized=result.prioritized,
            )
        raise ValueError(f"unknown approach {approach!r}")
