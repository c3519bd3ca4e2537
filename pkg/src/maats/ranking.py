"""Anonymized ranking sessions: task creation, ballots, Borda export."""

from __future__ import annotations

import hashlib
import json
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .stats import BordaResult, InvalidBallot, RankingBallot, borda
from .store import RunStore, StoreError
from .types import SYSTEMS

LABELS = ("A", "B", "C")


class RankingError(StoreError):
    pass


class UnknownAnnotator(RankingError):
    pass


class NoTasksRemaining(RankingError):
    pass


class UnknownTask(RankingError):
    pass


class DuplicateBallot(RankingError):
    pass


class InvalidOrdering(RankingError):
    pass


@dataclass
class RankingTask:
    task_id: str
    segment_id: str
    source_text: str
    outputs: dict[str, str]          # label -> text (safe to serve)
    assignment: dict[str, str]       # label -> system (server-side only)
    model_id: str

    def public_payload(self) -> dict:
        return {
            "task_id": self.task_id,
            "source_text": self.source_text,
            "outputs": dict(self.outputs),
        }


def _label_assignment(session_key: str, segment_id: str) -> dict[str, str]:
    """Uniform per-task label randomization, reproducible from the run ids."""
    seed = int.from_bytes(
        hashlib.sha256(f"{session_key}|{segment_id}".encode("utf-8")).digest()[:8],
        "big",
    )
    systems = list(SYSTEMS)
    random.Random(seed).shuffle(systems)
    return dict(zip(LABELS, systems))


@dataclass
class _Ballot:
    annotator_id: str
    task_id: str
    ordering_labels: list[str]
    ordering_systems: list[str]
    seq: int


class RankingSession:
    """One ranking campaign over three completed runs of the same dataset.

    Tasks and ballots persist as line-delimited records in the session
    directory; the label->system assignment never leaves the server side.
    """

    def __init__(self, session_dir: str | Path):
        self.dir = Path(session_dir)
        meta = json.loads((self.dir / "session.json").read_text(encoding="utf-8"))
        self.session_id: str = meta["session_id"]
        self.model_id: str = meta["model_id"]
        self.run_ids: list[str] = meta["run_ids"]
        self.annotators: list[str] | None = meta.get("annotators")
        self.tasks: list[RankingTask] = [
            RankingTask(**json.loads(line))
            for line in (self.dir / "tasks.jsonl").read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        self._by_task_id = {t.task_id: t for t in self.tasks}
        self._ballots: list[_Ballot] = []
        self._lock = threading.Lock()
        ballots_path = self.dir / "ballots.jsonl"
        if ballots_path.exists():
            for line in ballots_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._ballots.append(_Ballot(**json.loads(line)))

    # -- construction -----------------------------------------------------

    @classmethod
    def build(
        cls,
        store: RunStore,
        run_ids: list[str],
        source_texts: dict[str, str],
        session_id: str | None = None,
        annotators: list[str] | None = None,
    ) -> "RankingSession":
        if len(run_ids) != 3:
            raise RankingError("a ranking session needs exactly three runs")
        manifests = [store.manifest(run_id) for run_id in run_ids]
        systems = sorted(m.approach for m in manifests)
        if systems != sorted(SYSTEMS):
            raise RankingError(
                f"runs must cover zero_shot/single_agent/maats, got {systems}"
            )
        models = {m.model_id for m in manifests}
        if len(models) != 1:
            raise RankingError(f"runs mix models: {sorted(models)}")
        pairs = {m.pair for m in manifests}
        if len(pairs) != 1:
            raise RankingError(f"runs mix language pairs: {sorted(pairs)}")

        run_by_system = {m.approach: m.run_id for m in manifests}
        records_by_system = {
            system: {r.segment_id: r for r in store.records(run_id)}
            for system, run_id in run_by_system.items()
        }
        id_sets = [set(records) for records in records_by_system.values()]
        if any(ids != id_sets[0] for ids in id_sets):
            raise RankingError("runs cover different segment id sets")

        session_key = "+".join(sorted(run_ids))
        if session_id is None:
            session_id = hashlib.sha256(session_key.encode("utf-8")).hexdigest()[:12]
        session_dir = store.root / "sessions" / session_id
        session_dir.mkdir(parents=True, exist_ok=True)

        # dataset order = record order of the maats run
        ordered_segments = [r.segment_id for r in store.records(run_by_system["maats"])]
        missing = [sid for sid in ordered_segments if sid not in source_texts]
        if missing:
            raise RankingError(f"no source text for segments {missing[:5]}")
        tasks = []
        for index, segment_id in enumerate(ordered_segments, start=1):
            assignment = _label_assignment(session_key, segment_id)
            source_text = source_texts[segment_id]
            tasks.append(
                RankingTask(
                    task_id=f"t-{index:04d}",
                    segment_id=segment_id,
                    source_text=source_text,
                    outputs={
                        label: records_by_system[system][segment_id].final_text
                        for label, system in assignment.items()
                    },
                    assignment=assignment,
                    model_id=manifests[0].model_id,
                )
            )

        (session_dir / "session.json").write_text(
            json.dumps(
                {
                    "session_id": session_id,
                    "model_id": manifests[0].model_id,
                    "run_ids": sorted(run_ids),
                    "annotators": annotators,
                    "pair": manifests[0].pair,
                },
                sort_keys=True,
                ensure_ascii=False,
                indent=1,
            ),
            encoding="utf-8",
        )
        with (session_dir / "tasks.jsonl").open("w", encoding="utf-8") as fh:
            for task in tasks:
                fh.write(json.dumps(task.__dict__, sort_keys=True, ensure_ascii=False))
                fh.write("\n")
        return cls(session_dir)

    # -- task issuance ------------------------------------------------------

    def _check_annotator(self, annotator_id: str) -> None:
        if not annotator_id or not annotator_id.strip():
            raise UnknownAnnotator("annotator id must be non-empty")
        if self.annotators is not None and annotator_id not in self.annotators:
            raise UnknownAnnotator(f"annotator {annotator_id!r} is not registered")

    def _answered(self, annotator_id: str) -> set[str]:
        return {b.task_id for b in self._ballots if b.annotator_id == annotator_id}

    def next_task(self, annotator_id: str) -> RankingTask:
        """First task this annotator has not answered; stable across refreshes."""
        self._check_annotator(annotator_id)
        with self._lock:
            answered = self._answered(annotator_id)
            for task in self.tasks:
                if task.task_id not in answered:
                    return task
        raise NoTasksRemaining(f"annotator {annotator_id!r} has completed all tasks")

    def submit_ballot(self, annotator_id: str, task_id: str, ordering: list[str]) -> dict:
        self._check_annotator(annotator_id)
        task = self._by_task_id.get(task_id)
        if task is None:
            raise UnknownTask(task_id)
        if sorted(ordering) != sorted(LABELS):
            raise InvalidOrdering(
                f"ordering must be a permutation of {LABELS}, got {ordering}"
            )
        with self._lock:
            if task_id in self._answered(annotator_id):
                raise DuplicateBallot(f"{annotator_id} already ranked {task_id}")
            ballot = _Ballot(
                annotator_id=annotator_id,
                task_id=task_id,
                ordering_labels=list(ordering),
                ordering_systems=[task.assignment[label] for label in ordering],
                seq=len(self._ballots) + 1,
            )
            with (self.dir / "ballots.jsonl").open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(ballot.__dict__, sort_keys=True, ensure_ascii=False))
                fh.write("\n")
            self._ballots.append(ballot)
        return self.progress(annotator_id)

    def progress(self, annotator_id: str) -> dict:
        self._check_annotator(annotator_id)
        return {
            "annotator_id": annotator_id,
            "completed": len(self._answered(annotator_id)),
            "total": len(self.tasks),
        }

    # -- export --------------------------------------------------------------

    def ranking_ballots(self) -> list[RankingBallot]:
        return [
            RankingBallot(
                annotator_id=b.annotator_id,
                segment_id=self._by_task_id[b.task_id].segment_id,
                model_id=self.model_id,
                ordering=tuple(b.ordering_systems),
            )
            for b in self._ballots
        ]

    def export(self) -> dict:
        """Borda points and pairwise win rates, resolved to system names."""
        ballots = self.ranking_ballots()
        if not ballots:
            raise InvalidBallot("no ballots submitted yet")
        result: BordaResult = borda(ballots)
        return {
            "session_id": self.session_id,
            "model_id": self.model_id,
            "ballot_count": result.ballot_count,
            "points": result.points,
            "win_rates": {
                f"{a} over {b}": rate for (a, b), rate in sorted(result.win_rates.items())
            },
        }
