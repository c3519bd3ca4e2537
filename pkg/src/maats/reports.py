"""Delimited-text report emission for metrics, significance, and confusion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .metrics import bleu, meteor_lite, sentence_bleu, tokenize
from .stats import ConfusionCounts, anova_f, paired_bootstrap
from .store import RunStore
from .types import MqmCategory, Segment

EXTERNAL_METRICS = ("bleurt", "comet")

# Label swap for the linguistic-conventions row: confusion reporting
# traditionally calls this dimension "Fluency".
def category_label(cat: MqmCategory, fluency_label: bool = False) -> str:
    if fluency_label and cat is MqmCategory.LINGUISTIC_CONVENTIONS:
        return "Fluency"
    return cat.display_name


@dataclass
class RunScores:
    run_id: str
    direction: str
    model_id: str
    system: str
    corpus: dict[str, float | None]
    per_segment: dict[str, dict[str, float]] = field(default_factory=dict)


def collect_run_scores(
    store: RunStore,
    run_id: str,
    segments_by_id: dict[str, Segment],
    external_scores: dict[tuple[str, str, str], float] | None = None,
) -> RunScores:
    """Score one run's final texts against the dataset references.

    BLEU and METEOR are computed here (tokenization follows the target
    language); BLEURT/COMET are taken from ingested external score files,
    keyed by (segment_id, system, metric).
    """
    manifest = store.manifest(run_id)
    records = store.records(run_id)
    target_lang = manifest.pair.split("-")[1]

    candidates, references = [], []
    per_segment: dict[str, dict[str, float]] = {"bleu": {}, "meteor": {}}
    for record in records:
        segment = segments_by_id.get(record.segment_id)
        if segment is None or segment.reference_text is None:
            raise ValueError(
                f"run {run_id}: segment {record.segment_id} has no reference text"
            )
        cand = tokenize(record.final_text, target_lang)
        ref = tokenize(segment.reference_text, target_lang)
        candidates.append(cand)
        references.append(ref)
        per_segment["bleu"][record.segment_id] = sentence_bleu(cand, ref)
        per_segment["meteor"][record.segment_id] = meteor_lite(cand, ref)

    corpus: dict[str, float | None] = {
        "bleu": bleu(candidates, references),
        "meteor": (
            sum(per_segment["meteor"].values()) / len(records) if records else 0.0
        ),
    }
    for metric in EXTERNAL_METRICS:
        values = {}
        if external_scores:
            for record in records:
                key = (record.segment_id, manifest.approach, metric)
                if key in external_scores:
                    values[record.segment_id] = external_scores[key]
        per_segment[metric] = values
        corpus[metric] = (
            sum(values.values()) / len(values) if len(values) == len(records) and records
            else None
        )

    return RunScores(
        run_id=run_id,
        direction=manifest.pair,
        model_id=manifest.model_id,
        system=manifest.approach,
        corpus=corpus,
        per_segment=per_segment,
    )


def _fmt(value: float | None, scale: float = 1.0, digits: int = 4) -> str:
    if value is None:
        return "-"
    return f"{value * scale:.{digits}f}"


def metric_table(scores: list[RunScores]) -> str:
    """Per-direction metric table; BLEU and METEOR on the 0-100 scale."""
    lines = [
        "# bleu: corpus BLEU-4, add-one smoothing on zero higher-order counts, 0-100",
        "# meteor: exact-match METEOR-lite mean over segments, 0-100",
        "direction\tmodel\tsystem\tbleu\tmeteor\tbleurt\tcomet",
    ]
    for s in sorted(scores, key=lambda s: (s.direction, s.model_id, s.system)):
        lines.append(
            "\t".join(
                [
                    s.direction,
                    s.model_id,
                    s.system,
                    _fmt(s.corpus["bleu"], scale=100.0, digits=2),
                    _fmt(s.corpus["meteor"], scale=100.0, digits=2),
                    _fmt(s.corpus["bleurt"]),
                    _fmt(s.corpus["comet"]),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def significance_table(
    scores: list[RunScores],
    resamples: int = 1000,
    seed: int = 42,
) -> str:
    """ANOVA across systems plus paired bootstrap of maats over each baseline.

    Rows are metric x direction x model; metrics without full per-segment
    coverage for every system are skipped.
    """
    lines = [
        f"# paired bootstrap: {resamples} resamples, seed {seed}; p = fraction of",
        "# resamples where the maats mean fails to exceed the baseline mean",
        "metric\tdirection\tmodel\tf_stat\tp_anova\tp_boot_vs_zero_shot\tp_boot_vs_single_agent",
    ]
    groups: dict[tuple[str, str], list[RunScores]] = {}
    for s in scores:
        groups.setdefault((s.direction, s.model_id), []).append(s)

    for (direction, model_id), members in sorted(groups.items()):
        if len(members) < 2:
            continue
        members = sorted(members, key=lambda s: s.system)
        for metric in ("bleu", "meteor", "bleurt", "comet"):
            # all systems must cover the same segments, paired by id order
            id_sets = [set(s.per_segment.get(metric, {})) for s in members]
            if not id_sets[0] or any(ids != id_sets[0] for ids in id_sets):
                continue
            ordered_ids = sorted(id_sets[0])
            vectors = {
                s.system: [s.per_segment[metric][i] for i in ordered_ids]
                for s in members
            }
            try:
                result = anova_f(list(vectors.values()))
                f_text = "inf" if math.isinf(result.f) else f"{result.f:.6f}"
                p_text = f"{result.p:.6g}"
            except ValueError:
                f_text, p_text = "-", "-"
            boot = {"zero_shot": "-", "single_agent": "-"}
            if "maats" in vectors:
                for baseline in ("zero_shot", "single_agent"):
                    if baseline in vectors:
                        p = paired_bootstrap(
                            vectors["maats"], vectors[baseline], resamples, seed
                        )
                        boot[baseline] = f"{p:.4f}"
            lines.append(
                "\t".join(
                    [metric, direction, model_id, f_text, p_text,
                     boot["zero_shot"], boot["single_agent"]]
                )
            )
    return "\n".join(lines) + "\n"


def confusion_table(counts: ConfusionCounts, fluency_label: bool = False) -> str:
    """Category x TP/FP/FN table plus a totals row."""
    lines = ["category\ttp\tfp\tfn"]
    for cat in MqmCategory:
        tp, fp, fn = counts.per_category[cat]
        lines.append(f"{category_label(cat, fluency_label)}\t{tp}\t{fp}\t{fn}")
    total = counts.totals()
    lines.append(f"Total\t{total.tp}\t{total.fp}\t{total.fn}")
    return "\n".join(lines) + "\n"
