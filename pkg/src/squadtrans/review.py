"""Gold-set review: serve candidates to a human reviewer, persist verdicts,
export the corrected dataset.

The verdict log is append-only JSONL; re-submitting a verdict for the same
item appends a new line and the latest one wins at export time. Exporting
is a pure fold over (candidates, log): accepted items pass through
verbatim, corrected items get their replacement span, rejected and
unreviewed items are left out.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any

from pydantic import BaseModel

from .dataset import (
    AnswerSpan,
    Article,
    Dataset,
    Paragraph,
    QaItem,
    dataset_to_json,
    load_dataset,
)

DECISIONS = ("accept", "corrected", "reject")


class UnknownExampleError(KeyError):
    pass


class SpanMismatchError(ValueError):
    def __init__(self, expected: str, actual: str, start: int):
        super().__init__(
            f"corrected span does not match the context at offset {start}: "
            f"expected {expected!r}, found {actual!r}"
        )
        self.expected = expected
        self.actual = actual
        self.start = start


@dataclass(frozen=True)
class ReviewVerdict:
    qa_id: str
    decision: str
    corrected_text: str | None = None
    corrected_start: int | None = None
    reviewer: str = ""
    timestamp: str = ""

    def to_json(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "qa_id": self.qa_id,
            "decision": self.decision,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
        }
        if self.decision == "corrected":
            obj["corrected_text"] = self.corrected_text
            obj["corrected_start"] = self.corrected_start
        return obj


@dataclass(frozen=True)
class ReviewExample:
    qa_id: str
    index: int
    title: str
    context: str
    question: str
    answer_text: str
    answer_start: int
    is_impossible: bool
    score: float | None = None  # pipeline alignment score, when available

    def to_json(self, total: int) -> dict[str, Any]:
        return {
            "qa_id": self.qa_id,
            "index": self.index,
            "total": total,
            "title": self.title,
            "context": self.context,
            "question": self.question,
            "answer_text": self.answer_text,
            "answer_start": self.answer_start,
            "is_impossible": self.is_impossible,
            "score": self.score,
        }


class ReviewSession:
    """One reviewer working through a candidate dataset in order."""

    def __init__(self, candidates: Dataset, verdict_log_path: str):
        self.candidates = candidates
        self.log_path = verdict_log_path
        self._lock = threading.Lock()
        self._examples: list[ReviewExample] = []
        self._by_id: dict[str, ReviewExample] = {}
        for article in candidates.articles:
            for paragraph in article.paragraphs:
                for qa in paragraph.qas:
                    first = qa.answers[0] if qa.answers else AnswerSpan("", -1)
                    score = qa.extra.get("align_score")
                    example = ReviewExample(
                        qa_id=qa.id,
                        index=len(self._examples),
                        title=article.title,
                        context=paragraph.context,
                        question=qa.question,
                        answer_text=first.text,
                        answer_start=first.answer_start,
                        is_impossible=qa.is_impossible,
                        score=float(score) if isinstance(score, (int, float)) else None,
                    )
                    self._examples.append(example)
                    self._by_id[qa.id] = example
        self._verdicts: dict[str, ReviewVerdict] = {}
        self._replay_log()

    @classmethod
    def from_files(cls, candidates_path: str, verdicts_path: str) -> "ReviewSession":
        return cls(load_dataset(candidates_path, validate=False), verdicts_path)

    def _replay_log(self) -> None:
        if not os.path.exists(self.log_path):
            return
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                verdict = ReviewVerdict(
                    qa_id=obj["qa_id"],
                    decision=obj["decision"],
                    corrected_text=obj.get("corrected_text"),
                    corrected_start=obj.get("corrected_start"),
                    reviewer=obj.get("reviewer", ""),
                    timestamp=obj.get("timestamp", ""),
                )
                if verdict.qa_id in self._by_id:
                    self._verdicts[verdict.qa_id] = verdict

    @property
    def total(self) -> int:
        return len(self._examples)

    def get(self, qa_id: str) -> ReviewExample:
        try:
            return self._by_id[qa_id]
        except KeyError:
            raise UnknownExampleError(qa_id) from None

    def next_unreviewed(self) -> ReviewExample | None:
        for example in self._examples:
            if example.qa_id not in self._verdicts:
                return example
        return None

    def submit(self, verdict: ReviewVerdict) -> ReviewVerdict:
        """Validate and persist a verdict; returns it with the timestamp
        filled in."""
        if verdict.decision not in DECISIONS:
            raise ValueError(f"unknown decision {verdict.decision!r}")
        example = self.get(verdict.qa_id)
        if verdict.decision == "corrected":
            if verdict.corrected_text is None or verdict.corrected_start is None:
                raise ValueError("a corrected verdict needs corrected_text and corrected_start")
            start = verdict.corrected_start
            actual = ""
            if 0 <= start <= len(example.context):
                actual = example.context[start : start + len(verdict.corrected_text)]
            if start < 0 or actual != verdict.corrected_text:
                raise SpanMismatchError(verdict.corrected_text, actual, start)
        if not verdict.timestamp:
            verdict = ReviewVerdict(
                qa_id=verdict.qa_id,
                decision=verdict.decision,
                corrected_text=verdict.corrected_text,
                corrected_start=verdict.corrected_start,
                reviewer=verdict.reviewer,
                timestamp=datetime.now(timezone.utc).isoformat(),
            )
        with self._lock:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(verdict.to_json(), ensure_ascii=False) + "\n")
            self._verdicts[verdict.qa_id] = verdict
        return verdict

    def progress(self) -> dict[str, int]:
        counts = {"accept": 0, "corrected": 0, "reject": 0}
        for verdict in self._verdicts.values():
            counts[verdict.decision] += 1
        reviewed = len(self._verdicts)
        return {
            "total": self.total,
            "reviewed": reviewed,
            "remaining": self.total - reviewed,
            "accepted": counts["accept"],
            "corrected": counts["corrected"],
            "rejected": counts["reject"],
        }

    def export_gold(self) -> Dataset:
        """Accepted items verbatim, corrected items with their replacement
        span, rejected and unreviewed items excluded."""
        out_articles = []
        for article in self.candidates.articles:
            out_paragraphs = []
            for paragraph in article.paragraphs:
                kept = []
                for qa in paragraph.qas:
                    verdict = self._verdicts.get(qa.id)
                    if verdict is None or verdict.decision == "reject":
                        continue
                    if verdict.decision == "accept":
                        kept.append(qa)
                    else:
                        kept.append(
                            QaItem(
                                id=qa.id,
                                question=qa.question,
                                is_impossible=False,
                                answers=(
                                    AnswerSpan(
                                        text=verdict.corrected_text or "",
                                        answer_start=verdict.corrected_start or 0,
                                    ),
                                ),
                                extra=qa.extra,
                            )
                        )
                if kept:
                    out_paragraphs.append(
                        Paragraph(
                            context=paragraph.context,
                            qas=tuple(kept),
                            extra=paragraph.extra,
                        )
                    )
            if out_paragraphs:
                out_articles.append(
                    Article(
                        title=article.title,
                        paragraphs=tuple(out_paragraphs),
                        extra=article.extra,
                    )
                )
        return Dataset(
            version=self.candidates.version,
            articles=tuple(out_articles),
            extra=self.candidates.extra,
        )


class VerdictBody(BaseModel):
    decision: str
    corrected_text: str | None = None
    corrected_start: int | None = None
    reviewer: str = ""


def create_app(session: ReviewSession, static_dir: str | None = None):
    """Build the HTTP JSON API (and optionally the static UI) around a
    session."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import JSONResponse

    app = FastAPI(title="squadtrans review")

    @app.get("/api/queue/next")
    def queue_next():
        example = session.next_unreviewed()
        if example is None:
            return {
                "done": True,
                "reviewed": session.progress()["reviewed"],
                "total": session.total,
            }
        return {"done": False, "example": example.to_json(session.total)}

    @app.get("/api/examples/{qa_id}")
    def get_example(qa_id: str):
        try:
            example = session.get(qa_id)
        except UnknownExampleError:
            raise HTTPException(status_code=404, detail=f"unknown example {qa_id!r}")
        return {"example": example.to_json(session.total)}

    @app.post("/api/examples/{qa_id}/verdict")
    def post_verdict(qa_id: str, body: VerdictBody):
        verdict = ReviewVerdict(
            qa_id=qa_id,
            decision=body.decision,
            corrected_text=body.corrected_text,
            corrected_start=body.corrected_start,
            reviewer=body.reviewer,
        )
        try:
            session.submit(verdict)
        except UnknownExampleError:
            raise HTTPException(status_code=404, detail=f"unknown example {qa_id!r}")
        except SpanMismatchError as exc:
            raise HTTPException(
                status_code=400,
                detail={
                    "error": "span_mismatch",
                    "expected": exc.expected,
                    "actual": exc.actual,
                    "start": exc.start,
                },
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"ok": True, "progress": session.progress()}

    @app.get("/api/progress")
    def get_progress():
        return session.progress()

    @app.get("/api/export")
    def export():
        return JSONResponse(dataset_to_json(session.export_gold()))

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
