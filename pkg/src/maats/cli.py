"""Command-line entry points for runs, evaluation, confusion, and ranking."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from .config import AppConfig
from .orchestrator import APPROACHES, Orchestrator
from .prompts import PromptLibrary
from .ranking import RankingSession
from .reports import collect_run_scores, confusion_table, metric_table, significance_table
from .stats import confusion
from .store import (
    RunManifest,
    RunRecord,
    RunStore,
    file_digest,
    ingest_dataset,
    ingest_gold_annotations,
    load_external_scores,
)
from .types import AnnotationSet, LanguagePair, MqmCategory, category_from_slug


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _parse_categories(spec: str | None) -> list[MqmCategory] | None:
    if not spec:
        return None
    return [category_from_slug(token) for token in spec.split(",") if token.strip()]


def cmd_run(args) -> dict:
    config = AppConfig.load(args.config)
    pair = LanguagePair.parse(args.pair, allow_any=config.allow_any_language)
    segments = ingest_dataset(args.dataset, pair, reference_path=args.references)
    categories = _parse_categories(args.categories)

    gateway = config.build_gateway()
    orchestrator = Orchestrator(
        gateway,
        temperature=config.temperature,
        max_output_tokens=config.max_output_tokens,
        evaluator_concurrency=args.evaluator_concurrency or config.evaluator_concurrency,
        strict=args.strict,
        raw_annotations_to_editor=args.raw_annotations_to_editor,
        editor_token_budget=config.editor_token_budget,
    )

    dataset_digest = file_digest(args.dataset)
    run_id = args.run_id or f"{args.approach}-{args.model}-{pair}-{dataset_digest[:8]}"
    store = RunStore(config.store_root)
    store.create_run(
        RunManifest(
            run_id=run_id,
            model_id=args.model,
            approach=args.approach,
            pair=str(pair),
            dataset_digest=dataset_digest,
            temperature=config.temperature,
            started_at=_now(),
            config={
                "evaluator_concurrency": orchestrator.evaluator_concurrency,
                "segment_concurrency": config.segment_concurrency,
                "categories": [str(c) for c in categories] if categories else "all",
                "strict": args.strict,
            },
        )
    )

    def process(segment):
        return orchestrator.run_segment(segment, args.model, args.approach, categories)

    if config.segment_concurrency > 1:
        with ThreadPoolExecutor(max_workers=config.segment_concurrency) as pool:
            outcomes = list(pool.map(process, segments))
    else:
        outcomes = [process(s) for s in segments]

    appended = 0
    for outcome in outcomes:  # dataset order regardless of completion order
        record = RunRecord(
            run_id=run_id,
            segment_id=outcome.segment_id,
            system=outcome.system,
            drafts=outcome.drafts,
            final_text=outcome.final_text,
            annotation_sets=outcome.annotation_sets,
            transcript_digests=outcome.transcript_digests,
            fell_back=outcome.fell_back,
        )
        if store.append_record(record):
            appended += 1
    store.finish_run(run_id, _now())
    return {
        "run_id": run_id,
        "segments": len(segments),
        "records_appended": appended,
        "gateway_calls": gateway.call_count,
    }


def cmd_eval(args) -> dict:
    config = AppConfig.load(args.config)
    pair = LanguagePair.parse(args.pair, allow_any=config.allow_any_language)
    segments = ingest_dataset(args.dataset, pair, reference_path=args.references)
    segments_by_id = {s.id: s for s in segments}
    store = RunStore(config.store_root)
    external = load_external_scores(args.external_scores) if args.external_scores else None

    scores = [
        collect_run_scores(store, run_id, segments_by_id, external)
        for run_id in args.runs.split(",")
    ]
    metrics_text = metric_table(scores)
    significance_text = significance_table(
        scores, resamples=config.bootstrap_resamples, seed=config.bootstrap_seed
    )

    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metrics.tsv").write_text(metrics_text, encoding="utf-8")
        (out_dir / "significance.tsv").write_text(significance_text, encoding="utf-8")
    else:
        sys.stdout.write(metrics_text)
        sys.stdout.write("\n")
        sys.stdout.write(significance_text)
    return {
        "runs": len(scores),
        "out": str(out_dir) if out_dir else "-",
    }


def cmd_confusion(args) -> dict:
    config = AppConfig.load(args.config)
    store = RunStore(config.store_root)
    gold = ingest_gold_annotations(args.gold)

    pred_sets = []
    covered = set()
    for record in store.records(args.run):
        pred_sets.extend(record.annotation_sets)
        covered.add(record.segment_id)
    # pad both sides so pred and gold cover the same segment ids
    gold_sets = list(gold.values())
    for segment_id in covered - set(gold):
        gold_sets.append(AnnotationSet(segment_id=segment_id, draft_id="gold"))
    for segment_id in set(gold) - covered:
        pred_sets.append(AnnotationSet(segment_id=segment_id, draft_id="pred"))

    counts = confusion(pred_sets, gold_sets, severity_aware=args.severity_aware)
    table = confusion_table(counts, fluency_label=args.fluency_label)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    totals = counts.totals()
    return {"tp": totals.tp, "fp": totals.fp, "fn": totals.fn}


def cmd_rank_serve(args) -> dict:
    config = AppConfig.load(args.config)
    store = RunStore(config.store_root)
    session = _build_or_load_session(config, store, args)

    from .service import create_app
    app = create_app(session, static_dir=args.static)

    import uvicorn
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return {"session_id": session.session_id}


def _build_or_load_session(config: AppConfig, store: RunStore, args) -> RankingSession:
    if args.session and (store.root / "sessions" / args.session / "session.json").exists():
        return RankingSession(store.root / "sessions" / args.session)
    if not args.runs:
        raise ValueError("need --runs to build a new session")
    pair = LanguagePair.parse(args.pair, allow_any=config.allow_any_language)
    segments = ingest_dataset(args.dataset, pair, reference_path=args.references)
    return RankingSession.build(
        store,
        run_ids=args.runs.split(","),
        source_texts={s.id: s.source_text for s in segments},
        session_id=args.session,
        annotators=args.annotators.split(",") if args.annotators else None,
    )


def cmd_rank_export(args) -> dict:
    config = AppConfig.load(args.config)
    store = RunStore(config.store_root)
    session = RankingSession(store.root / "sessions" / args.session)
    report = session.export()
    ballots = session.ranking_ballots()
    payload = json.dumps(report, sort_keys=True, ensure_ascii=False, indent=1)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "borda.json").write_text(payload + "\n", encoding="utf-8")
        with (out_dir / "ballots.jsonl").open("w", encoding="utf-8") as fh:
            for ballot in ballots:
                fh.write(json.dumps({
                    "annotator_id": ballot.annotator_id,
                    "segment_id": ballot.segment_id,
                    "model_id": ballot.model_id,
                    "ordering": list(ballot.ordering),
                }, sort_keys=True, ensure_ascii=False))
                fh.write("\n")
    else:
        sys.stdout.write(payload + "\n")
    return report


def cmd_dump_prompts(args) -> dict:
    written = PromptLibrary().dump(args.out)
    return {"templates": len(written), "out": str(args.out)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maats")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an approach over a dataset")
    run.add_argument("--config", required=True)
    run.add_argument("--approach", required=True, choices=APPROACHES)
    run.add_argument("--model", required=True)
    run.add_argument("--pair", required=True, help="e.g. en-de")
    run.add_argument("--dataset", required=True)
    run.add_argument("--references", help="reference file for parallel-text datasets")
    run.add_argument("--categories", help="comma-separated MQM category subset")
    run.add_argument("--run-id")
    run.add_argument("--strict", action="store_true")
    run.add_argument("--raw-annotations-to-editor", action="store_true")
    run.add_argument("--evaluator-concurrency", type=int)
    run.set_defaults(fn=cmd_run)

    ev = sub.add_parser("eval", help="metric and significance tables")
    ev.add_argument("--config", required=True)
    ev.add_argument("--runs", required=True, help="comma-separated run ids")
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--references")
    ev.add_argument("--pair", required=True)
    ev.add_argument("--external-scores")
    ev.add_argument("--out")
    ev.set_defaults(fn=cmd_eval)

    conf = sub.add_parser("confusion", help="gold-vs-predicted MQM confusion table")
    conf.add_argument("--config", required=True)
    conf.add_argument("--run", required=True)
    conf.add_argument("--gold", required=True)
    conf.add_argument("--fluency-label", action="store_true",
                      help='label linguistic_conventions as "Fluency"')
    conf.add_argument("--severity-aware", action="store_true")
    conf.add_argument("--out")
    conf.set_defaults(fn=cmd_confusion)

    serve = sub.add_parser("rank-serve", help="start the ranking HTTP service")
    serve.add_argument("--config", required=True)
    serve.add_argument("--runs", help="three run ids (zero_shot, single_agent, maats)")
    serve.add_argument("--dataset")
    serve.add_argument("--references")
    serve.add_argument("--pair")
    serve.add_argument("--session")
    serve.add_argument("--annotators", help="restrict to these annotator ids")
    serve.add_argument("--static", help="directory of built UI assets")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(fn=cmd_rank_serve)

    export = sub.add_parser("rank-export", help="dump ballots and the Borda report")
    export.add_argument("--config", required=True)
    export.add_argument("--session", required=True)
    export.add_argument("--out")
    export.set_defaults(fn=cmd_rank_export)

    dump = sub.add_parser("dump-prompts", help="write prompt templates to disk")
    dump.add_argument("--out", required=True)
    dump.set_defaults(fn=cmd_dump_prompts)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        summary = args.fn(args)
    except Exception as exc:  # machine-parsable error record on any failure
        sys.stderr.write(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 1
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
