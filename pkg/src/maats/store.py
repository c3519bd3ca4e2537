"""Dataset ingestion, run manifests, append-only records, external-score files."""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .types import (
    AnnotationSet,
    ErrorAnnotation,
    LanguagePair,
    MqmCategory,
    Segment,
    Severity,
    TranslationDraft,
    category_from_slug,
    severity_from_token,
    slugify,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class StoreError(Exception):
    pass


class DuplicateId(StoreError):
    pass


class EmptySource(StoreError):
    pass


class MalformedRecord(StoreError):
    pass


class UnknownRun(StoreError):
    pass


class ConflictingRecord(StoreError):
    pass


# -- dataset ingestion ---------------------------------------------------------

def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def ingest_dataset(
    path: str | Path,
    pair: LanguagePair,
    reference_path: str | Path | None = None,
) -> list[Segment]:
    """Load segments from a .jsonl record file or parallel plain-text files.

    JSONL records carry {id, source, reference?}; plain-text mode numbers
    lines "1".. and takes references from reference_path when given.
    Duplicate ids and empty sources are rejected.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix in (".jsonl", ".ndjson", ".json"):
        return _ingest_jsonl(path, pair)
    return _ingest_parallel(path, reference_path, pair)


def _ingest_jsonl(path: Path, pair: LanguagePair) -> list[Segment]:
    segments: list[Segment] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                seg_id = str(rec["id"])
                source = rec["source"]
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedRecord(f"{path}:{lineno}: {exc}") from exc
            if not str(source).strip():
                raise EmptySource(f"{path}:{lineno}: empty source for id {seg_id!r}")
            if seg_id in seen:
                raise DuplicateId(f"{path}:{lineno}: duplicate segment id {seg_id!r}")
            seen.add(seg_id)
            segments.append(
                Segment(
                    id=seg_id,
                    source_text=str(source),
                    pair=pair,
                    reference_text=rec.get("reference"),
                )
            )
    return segments


def _ingest_parallel(
    source_path: Path, reference_path: str | Path | None, pair: LanguagePair
) -> list[Segment]:
    sources = source_path.read_text(encoding="utf-8").splitlines()
    references: list[str | None]
    if reference_path is not None:
        references = list(Path(reference_path).read_text(encoding="utf-8").splitlines())
        if len(references) != len(sources):
            raise MalformedRecord(
                f"{source_path} has {len(sources)} lines but "
                f"{reference_path} has {len(references)}"
            )
    else:
        references = [None] * len(sources)
    segments = []
    for lineno, (source, reference) in enumerate(zip(sources, references), start=1):
        if not source.strip():
            raise EmptySource(f"{source_path}:{lineno}: empty source line")
        segments.append(
            Segment(id=str(lineno), source_text=source, pair=pair, reference_text=reference)
        )
    return segments


def ingest_gold_annotations(path: str | Path) -> dict[str, AnnotationSet]:
    """Load human MQM reference data, grouped per segment.

    Records: {segment_id, category, subcategory, severity, explanation?}.
    Categories go through the alias table ("fluency" lands in
    linguistic_conventions); records with a no-error severity are skipped
    with a warning.
    """
    path = Path(path)
    sets: dict[str, AnnotationSet] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                segment_id = str(rec["segment_id"])
                raw_category = str(rec["category"])
                subcategory = slugify(str(rec["subcategory"]))
                raw_severity = str(rec["severity"])
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedRecord(f"{path}:{lineno}: {exc}") from exc
            category = category_from_slug(raw_category)  # UnknownCategory propagates
            try:
                severity = severity_from_token(raw_severity)
            except ValueError as exc:
                raise MalformedRecord(f"{path}:{lineno}: {exc}") from exc
            if not subcategory:
                raise MalformedRecord(f"{path}:{lineno}: empty subcategory")
            if severity is None:
                logger.warning("%s:%d: no-error severity, record skipped", path, lineno)
                continue
            target = sets.setdefault(
                segment_id, AnnotationSet(segment_id=segment_id, draft_id="gold")
            )
            target.annotations.append(
                ErrorAnnotation(
                    category=category,
                    subcategory=subcategory,
                    severity=severity,
                    explanation=rec.get("explanation", ""),
                    origin="gold",
                )
            )
    return sets


def load_external_scores(path: str | Path) -> dict[tuple[str, str, str], float]:
    """Neural-metric scores from an external scorer.

    Line-delimited {segment_id, system, metric_name, score}; keyed by
    (segment_id, system, metric_name). Later lines override earlier ones.
    """
    scores: dict[tuple[str, str, str], float] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = (str(rec["segment_id"]), str(rec["system"]), str(rec["metric_name"]))
                scores[key] = float(rec["score"])
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedRecord(f"{path}:{lineno}: {exc}") from exc
    return scores


# -- run persistence -------------------------------------------------------------

@dataclass
class RunManifest:
    run_id: str
    model_id: str
    approach: str
    pair: str
    dataset_digest: str
    temperature: float
    started_at: str
    finished_at: str = ""
    config: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION


@dataclass
class RunRecord:
    run_id: str
    segment_id: str
    system: str
    drafts: list[TranslationDraft]
    final_text: str
    annotation_sets: list[AnnotationSet]
    transcript_digests: list[str]
    fell_back: bool | None = None
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        payload = {
            "schema_version": self.schema_version,
            "run_id": self.run_id,
            "segment_id": self.segment_id,
            "system": self.system,
            "drafts": [asdict(d) for d in self.drafts],
            "final_text": self.final_text,
            "annotation_sets": [
                {
                    "segment_id": s.segment_id,
                    "draft_id": s.draft_id,
                    "raw_text": s.raw_text,
                    "annotations": [
                        {
                            "category": str(a.category),
                            "subcategory": a.subcategory,
                            "severity": str(a.severity),
                            "explanation": a.explanation,
                            "origin": a.origin,
                        }
                        for a in s.annotations
                    ],
                }
                for s in self.annotation_sets
            ],
            "transcript_digests": self.transcript_digests,
            "fell_back": self.fell_back,
        }
        return json.dumps(payload, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        payload = json.loads(text)
        return cls(
            run_id=payload["run_id"],
            segment_id=payload["segment_id"],
            system=payload["system"],
            drafts=[TranslationDraft(**d) for d in payload["drafts"]],
            final_text=payload["final_text"],
            annotation_sets=[
                AnnotationSet(
                    segment_id=s["segment_id"],
                    draft_id=s["draft_id"],
                    raw_text=s["raw_text"],
                    annotations=[
                        ErrorAnnotation(
                            category=MqmCategory(a["category"]),
                            subcategory=a["subcategory"],
                            severity=Severity(a["severity"]),
                            explanation=a["explanation"],
                            origin=a["origin"],
                        )
                        for a in s["annotations"]
                    ],
                )
                for s in payload["annotation_sets"]
            ],
            transcript_digests=payload["transcript_digests"],
            fell_back=payload["fell_back"],
            schema_version=payload["schema_version"],
        )

    def content_digest(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


class RunStore:
    """Append-only run persistence under a root directory.

    Layout: <root>/runs/<run_id>/manifest.json and records.jsonl. One writer
    per store instance (appends serialize through a lock); readers are free.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        self._index: dict[tuple[str, str], str] = {}
        for manifest_path in sorted(self.root.glob("runs/*/manifest.json")):
            run_id = manifest_path.parent.name
            for record in self.records(run_id):
                self._index[(run_id, record.segment_id)] = record.content_digest()

    def _run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / run_id

    def create_run(self, manifest: RunManifest) -> None:
        run_dir = self._run_dir(manifest.run_id)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "manifest.json").write_text(
            json.dumps(asdict(manifest), sort_keys=True, ensure_ascii=False, indent=1),
            encoding="utf-8",
        )

    def manifest(self, run_id: str) -> RunManifest:
        path = self._run_dir(run_id) / "manifest.json"
        if not path.exists():
            raise UnknownRun(run_id)
        return RunManifest(**json.loads(path.read_text(encoding="utf-8")))

    def finish_run(self, run_id: str, finished_at: str) -> None:
        manifest = self.manifest(run_id)
        manifest.finished_at = finished_at
        self.create_run(manifest)

    def list_runs(self) -> list[str]:
        return sorted(p.parent.name for p in self.root.glob("runs/*/manifest.json"))

    def append_record(self, record: RunRecord) -> bool:
        """Durably append; returns False for an exact duplicate (idempotent).

        Same (run_id, segment_id) with different content raises
        ConflictingRecord.
        """
        run_dir = self._run_dir(record.run_id)
        if not (run_dir / "manifest.json").exists():
            raise UnknownRun(record.run_id)
        key = (record.run_id, record.segment_id)
        digest = record.content_digest()
        with self._lock:
            existing = self._index.get(key)
            if existing == digest:
                return False
            if existing is not None:
                raise ConflictingRecord(
                    f"run {record.run_id} already has a different record "
                    f"for segment {record.segment_id}"
                )
            with (run_dir / "records.jsonl").open("a", encoding="utf-8") as fh:
                fh.write(record.to_json())
                fh.write("\n")
            self._index[key] = digest
        return True

    def records(self, run_id: str) -> list[RunRecord]:
        path = self._run_dir(run_id) / "records.jsonl"
        if not path.exists():
            if not (self._run_dir(run_id) / "manifest.json").exists():
                raise UnknownRun(run_id)
            return []
        return [
            RunRecord.from_json(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
