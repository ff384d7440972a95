"""In-memory session service for interactive sequential QA over tables.

Each session pins a table, an engine, and a live rewrite policy. Asking a
question runs the engine with the session's own previous prediction as the
conditioning signal, so replaying a transcript on a fresh service
reproduces identical answers. Policies that need gold answers are refused
up front: live traffic has none.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import load_table
from .model import ModelParams, StepResult, answer_question_chain, load_model
from .parser import parse_and_answer
from .rewriting import (
    ReferentialLexicon,
    RewritePolicy,
    has_referential_expression,
    rewrite_table,
)
from .tables import AnswerCoordinates, Table

ENGINES = ("primitive", "neural")
LIVE_POLICIES = (
    RewritePolicy.NEVER,
    RewritePolicy.ALWAYS,
    RewritePolicy.ROW_SUBSET,
)
TOP_COLUMNS = 3


class ServiceError(Exception):
    """Base for request failures; ``status`` maps onto the HTTP layer."""

    status = 500


class NotFoundError(ServiceError):
    status = 404


class BadRequestError(ServiceError):
    status = 400


@dataclass(frozen=True)
class HistoryStep:
    position: int
    question: str
    predicted: AnswerCoordinates
    attention: dict | None
    rewritten_rows: tuple[int, ...] | None


@dataclass
class Session:
    session_id: str
    table_id: str
    engine: str
    policy: RewritePolicy
    history: list[HistoryStep] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _attention_summary(step: StepResult) -> dict:
    m_col = [float(x) for x in step.modules.m_col.value]
    ranked = sorted(range(len(m_col)), key=lambda c: (-m_col[c], c))
    return {
        "m_att": [float(x) for x in step.m_att.value],
        "m_col": m_col,
        "top_columns": ranked[:TOP_COLUMNS],
    }


class QAService:
    """Session store plus the two answer engines over a fixed table set."""

    def __init__(
        self,
        tables: dict[str, Table],
        params: ModelParams | None = None,
        transcript_path: str | Path | None = None,
        lexicon: ReferentialLexicon | None = None,
    ):
        self.tables = dict(tables)
        self.params = params
        self.transcript_path = Path(transcript_path) if transcript_path else None
        self.lexicon = lexicon or ReferentialLexicon()
        self.sessions: dict[str, Session] = {}
        self._transcript_lock = threading.Lock()

    @classmethod
    def from_paths(
        cls,
        tables_dir: str | Path,
        checkpoint: str | Path | None = None,
        transcript_path: str | Path | None = None,
    ) -> "QAService":
        tables_dir = Path(tables_dir)
        if not tables_dir.is_dir():
            raise NotFoundError(f"tables directory not found: {tables_dir}")
        tables = {}
        for path in sorted(tables_dir.glob("*.csv")):
            tables[path.name] = load_table(path, path.name)
        params = load_model(checkpoint) if checkpoint is not None else None
        return cls(tables, params=params, transcript_path=transcript_path)

    def _session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise NotFoundError(f"unknown session {session_id!r}") from None

    def create_session(
        self,
        table_id: str,
        engine: str = "primitive",
        policy: str | RewritePolicy = RewritePolicy.NEVER,
    ) -> dict:
        if table_id not in self.tables:
            raise NotFoundError(f"unknown table {table_id!r}")
        if engine not in ENGINES:
            raise BadRequestError(f"unknown engine {engine!r}; expected one of {ENGINES}")
        if engine == "neural" and self.params is None:
            raise NotFoundError(
                "neural engine requires a checkpoint; the server was started without one"
            )
        try:
            policy = RewritePolicy(policy)
        except ValueError:
            raise BadRequestError(f"unknown policy {policy!r}") from None
        if policy not in LIVE_POLICIES:
            raise BadRequestError(
                f"policy {policy.value!r} requires gold answers and is not available "
                "for live sessions"
            )
        session = Session(
            session_id=uuid.uuid4().hex,
            table_id=table_id,
            engine=engine,
            policy=policy,
        )
        self.sessions[session.session_id] = session
        return {
            "session_id": session.session_id,
            "table_id": table_id,
            "engine": engine,
            "policy": policy.value,
            "history_length": 0,
        }

    def _should_rewrite(
        self, session: Session, question: str, previous: AnswerCoordinates | None
    ) -> bool:
        if previous is None or previous.is_empty:
            return False
        if session.policy is RewritePolicy.ALWAYS:
            return True
        if session.policy is RewritePolicy.ROW_SUBSET:
            return has_referential_expression(question, self.lexicon)
        return False

    def _answer(
        self,
        session: Session,
        question: str,
        previous: AnswerCoordinates | None,
        rewrite: bool,
    ) -> tuple[AnswerCoordinates, dict | None, tuple[int, ...] | None]:
        table = self.tables[session.table_id]
        if rewrite:
            rewritten = rewrite_table(table, previous)
            if session.engine == "neural":
                step = answer_question_chain([question], rewritten.table, self.params)[-1]
                coords = rewritten.to_original(step.predicted)
                return coords, _attention_summary(step), rewritten.row_map
            coords = rewritten.to_original(
                parse_and_answer(question, rewritten.table, None)
            )
            return coords, None, rewritten.row_map
        if session.engine == "neural":
            texts = [h.question for h in session.history] + [question]
            sources = [h.predicted for h in session.history] + [None]
            step = answer_question_chain(texts, table, self.params, p1_sources=sources)[-1]
            return step.predicted, _attention_summary(step), None
        return parse_and_answer(question, table, previous), None, None

    def ask(self, session_id: str, question: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            if not question or not question.strip():
                raise BadRequestError("question is empty")
            table = self.tables[session.table_id]
            previous = session.history[-1].predicted if session.history else None
            rewrite = self._should_rewrite(session, question, previous)
            coords, attention, rewritten_rows = self._answer(
                session, question, previous, rewrite
            )
            step = HistoryStep(
                position=len(session.history) + 1,
                question=question,
                predicted=coords,
                attention=attention,
                rewritten_rows=rewritten_rows,
            )
            session.history.append(step)
            cells = [[r, c] for r, c in coords.ordered()]
            response = {
                "session_id": session.session_id,
                "position": step.position,
                "question": question,
                "answer_coordinates": cells,
                "answer_texts": coords.texts(table),
                "highlights": cells,
                "attention": attention,
                "rewritten_table_rows": (
                    list(rewritten_rows) if rewritten_rows is not None else None
                ),
            }
            self._record(session, step)
            return response

    def _record(self, session: Session, step: HistoryStep) -> None:
        if self.transcript_path is None:
            return
        line = json.dumps(
            {
                "session_id": session.session_id,
                "table_id": session.table_id,
                "engine": session.engine,
                "policy": session.policy.value,
                "position": step.position,
                "question": step.question,
                "answer_coordinates": [[r, c] for r, c in step.predicted.ordered()],
            }
        )
        with self._transcript_lock:
            with self.transcript_path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def reset(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            session.history.clear()
        return {"session_id": session_id, "history_length": 0}

    def list_tables(self) -> list[dict]:
        return [
            {
                "table_id": table_id,
                "n_rows": table.n_rows,
                "n_cols": table.n_cols,
                "headers": list(table.headers),
            }
            for table_id, table in sorted(self.tables.items())
        ]

    def get_table(self, table_id: str) -> dict:
        if table_id not in self.tables:
            raise NotFoundError(f"unknown table {table_id!r}")
        table = self.tables[table_id]
        return {
            "table_id": table_id,
            "headers": list(table.headers),
            "cells": [list(row) for row in table.cells],
            "column_kinds": [kind.value for kind in table.column_kinds],
        }


def replay_transcript(path: str | Path, service: QAService) -> list[dict]:
    """Re-ask a recorded transcript on ``service`` and compare coordinates.

    Sessions are recreated with the recorded table, engine, and policy;
    each entry of the result pairs the recorded coordinates with the
    replayed ones.
    """
    path = Path(path)
    if not path.is_file():
        raise NotFoundError(f"transcript not found: {path}")
    session_map: dict[str, str] = {}
    results = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            old_id = record["session_id"]
            if old_id not in session_map:
                created = service.create_session(
                    record["table_id"], record["engine"], record["policy"]
                )
                session_map[old_id] = created["session_id"]
            response = service.ask(session_map[old_id], record["question"])
            results.append(
                {
                    "session_id": old_id,
                    "position": record["position"],
                    "recorded": record["answer_coordinates"],
                    "replayed": response["answer_coordinates"],
                    "match": record["answer_coordinates"]
                    == response["answer_coordinates"],
                }
            )
    return results
