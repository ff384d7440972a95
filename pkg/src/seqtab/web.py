"""HTTP wiring: FastAPI routes over a QAService plus static UI serving."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .service import QAService, ServiceError


class CreateSessionBody(BaseModel):
    table_id: str
    engine: str = "primitive"
    policy: str = "never"


class AskBody(BaseModel):
    question: str


def create_app(service: QAService, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="seqtab qa-service")

    @app.exception_handler(ServiceError)
    async def service_error(request: Request, exc: ServiceError) -> JSONResponse:
        return JSONResponse(status_code=exc.status, content={"detail": str(exc)})

    @app.post("/sessions")
    def create_session(body: CreateSessionBody) -> dict:
        return service.create_session(body.table_id, body.engine, body.policy)

    @app.post("/sessions/{session_id}/questions")
    def ask(session_id: str, body: AskBody) -> dict:
        return service.ask(session_id, body.question)

    @app.post("/sessions/{session_id}/reset")
    def reset(session_id: str) -> dict:
        return service.reset(session_id)

    @app.get("/tables")
    def list_tables() -> list[dict]:
        return service.list_tables()

    @app.get("/tables/{table_id}")
    def get_table(table_id: str) -> dict:
        return service.get_table(table_id)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
