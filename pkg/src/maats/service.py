"""JSON-over-HTTP API behind the ranking UI."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .ranking import (
    DuplicateBallot,
    InvalidOrdering,
    NoTasksRemaining,
    RankingSession,
    UnknownAnnotator,
    UnknownTask,
)

_STATUS = {
    UnknownAnnotator: (403, "unknown_annotator"),
    NoTasksRemaining: (404, "no_tasks_remaining"),
    UnknownTask: (404, "unknown_task"),
    DuplicateBallot: (409, "duplicate_ballot"),
    InvalidOrdering: (422, "invalid_ordering"),
}


class BallotIn(BaseModel):
    annotator_id: str
    task_id: str
    ordering: list[str]  # labels, best to worst


def create_app(session: RankingSession, static_dir: str | Path | None = None) -> FastAPI:
    """The three ranking endpoints plus (optionally) the built UI assets.

    Task payloads never contain system names; the label assignment stays in
    the session files and is only resolved by rank-export.
    """
    app = FastAPI(title="ranking service")

    def error_response(exc: Exception) -> JSONResponse:
        status, code = _STATUS[type(exc)]
        return JSONResponse(status_code=status, content={"error": code, "detail": str(exc)})

    for exc_type in _STATUS:
        def handler(request: Request, exc: Exception, _=None) -> JSONResponse:
            return error_response(exc)
        app.add_exception_handler(exc_type, handler)

    @app.get("/api/tasks/next")
    def next_task(annotator: str = Query(...)):
        task = session.next_task(annotator)
        payload = task.public_payload()
        payload.update(session.progress(annotator))
        return payload

    @app.post("/api/ballots")
    def submit_ballot(ballot: BallotIn):
        progress = session.submit_ballot(
            ballot.annotator_id, ballot.task_id, ballot.ordering
        )
        return {"status": "ok", **progress}

    @app.get("/api/progress")
    def progress(annotator: str = Query(...)):
        return session.progress(annotator)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
