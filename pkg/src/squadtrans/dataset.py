"""SQuAD 2.0 data model: parsing, validation, serialization and statistics.

Answer offsets are counted in Unicode code points throughout, which is what
Python string indexing gives us natively. The one invariant everything else
in this package relies on: ``context[answer_start : answer_start +
len(text)] == text`` for every answer span.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any

logger = logging.getLogger(__name__)

EXPECTED_VERSION = "v2.0"


class DatasetError(Exception):
    """Base class for dataset parsing and schema failures."""


class DatasetParseError(DatasetError):
    """The input is not well-formed JSON."""

    def __init__(self, message: str, byte_position: int | None = None):
        if byte_position is not None:
            message = f"{message} (byte {byte_position})"
        super().__init__(message)
        self.byte_position = byte_position


class SchemaError(DatasetError):
    """A required field is missing or an invariant is violated."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class AnswerSpan:
    """An answer surface form and its code-point offset into the context."""

    text: str
    answer_start: int


@dataclass(frozen=True)
class QaItem:
    id: str
    question: str
    is_impossible: bool
    answers: tuple[AnswerSpan, ...]
    plausible_answers: tuple[AnswerSpan, ...] | None = None
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Paragraph:
    context: str
    qas: tuple[QaItem, ...]
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Article:
    title: str
    paragraphs: tuple[Paragraph, ...]
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Dataset:
    version: str
    articles: tuple[Article, ...]
    extra: dict[str, Any] = field(default_factory=dict)

    def iter_qas(self):
        """Yield (article, paragraph, qa) triples in document order."""
        for article in self.articles:
            for paragraph in article.paragraphs:
                for qa in paragraph.qas:
                    yield article, paragraph, qa


@dataclass(frozen=True)
class DatasetStats:
    article_count: int
    paragraph_count: int
    qa_count: int
    answerable_count: int
    unanswerable_count: int


@dataclass(frozen=True)
class SpanViolation:
    """A span whose stored offset does not reproduce its text."""

    qa_id: str
    expected: str
    actual: str
    answer_start: int


def _require(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise SchemaError(f"missing required field '{key}'", path)
    return obj[key]


def _extras(obj: dict, known: tuple[str, ...], keep: bool) -> dict[str, Any]:
    if not keep:
        return {}
    return {k: v for k, v in obj.items() if k not in known}


def _parse_span(obj: Any, path: str, keep_extra: bool) -> AnswerSpan:
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    text = _require(obj, "text", path)
    start = _require(obj, "answer_start", path)
    if not isinstance(text, str):
        raise SchemaError("'text' must be a string", path)
    if not isinstance(start, int) or isinstance(start, bool):
        raise SchemaError("'answer_start' must be an integer", path)
    # Unknown keys on spans are dropped: the SQuAD schema is closed here and
    # keeping them would break AnswerSpan equality semantics.
    return AnswerSpan(text=text, answer_start=start)


def _parse_qa(obj: Any, path: str, keep_extra: bool) -> QaItem:
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    qa_id = _require(obj, "id", path)
    question = _require(obj, "question", path)
    answers_raw = _require(obj, "answers", path)
    if not isinstance(answers_raw, list):
        raise SchemaError("'answers' must be an array", path)
    answers = tuple(
        _parse_span(a, f"{path}.answers[{i}]", keep_extra)
        for i, a in enumerate(answers_raw)
    )
    plausible = None
    if "plausible_answers" in obj:
        plausible_raw = obj["plausible_answers"]
        if not isinstance(plausible_raw, list):
            raise SchemaError("'plausible_answers' must be an array", path)
        plausible = tuple(
            _parse_span(a, f"{path}.plausible_answers[{i}]", keep_extra)
            for i, a in enumerate(plausible_raw)
        )
    return QaItem(
        id=str(qa_id),
        question=str(question),
        is_impossible=bool(obj.get("is_impossible", False)),
        answers=answers,
        plausible_answers=plausible,
        extra=_extras(
            obj,
            ("id", "question", "is_impossible", "answers", "plausible_answers"),
            keep_extra,
        ),
    )


def _parse_paragraph(obj: Any, path: str, keep_extra: bool) -> Paragraph:
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    context = _require(obj, "context", path)
    if not isinstance(context, str):
        raise SchemaError("'context' must be a string", path)
    qas_raw = _require(obj, "qas", path)
    if not isinstance(qas_raw, list):
        raise SchemaError("'qas' must be an array", path)
    qas = tuple(
        _parse_qa(q, f"{path}.qas[{i}]", keep_extra) for i, q in enumerate(qas_raw)
    )
    return Paragraph(
        context=context,
        qas=qas,
        extra=_extras(obj, ("context", "qas"), keep_extra),
    )


def _parse_article(obj: Any, path: str, keep_extra: bool) -> Article:
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    title = _require(obj, "title", path)
    paragraphs_raw = _require(obj, "paragraphs", path)
    if not isinstance(paragraphs_raw, list):
        raise SchemaError("'paragraphs' must be an array", path)
    paragraphs = tuple(
        _parse_paragraph(p, f"{path}.paragraphs[{i}]", keep_extra)
        for i, p in enumerate(paragraphs_raw)
    )
    return Article(
        title=str(title),
        paragraphs=paragraphs,
        extra=_extras(obj, ("title", "paragraphs"), keep_extra),
    )


def parse_dataset(
    raw: bytes | str,
    *,
    validate: bool = True,
    keep_extra: bool = True,
) -> Dataset:
    """Parse a SQuAD 2.0 JSON document into a Dataset.

    Args:
        raw: UTF-8 bytes or an already-decoded string.
        validate: when True (default), enforce the span-substring invariant,
            is_impossible consistency, id uniqueness and non-empty titles,
            raising SchemaError on the first violation. Pass False to
            materialize the graph as-is and inspect it with validate_spans().
        keep_extra: preserve unknown JSON fields for round-tripping.
    """
    if isinstance(raw, bytes):
        text = raw.decode("utf-8")
    else:
        text = raw
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        byte_pos = len(text[: exc.pos].encode("utf-8"))
        raise DatasetParseError(f"malformed JSON: {exc.msg}", byte_pos) from exc

    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object", "$")
    data = _require(doc, "data", "$")
    if not isinstance(data, list):
        raise SchemaError("'data' must be an array", "$.data")

    version = doc.get("version", "")
    if version and version != EXPECTED_VERSION:
        logger.warning("dataset version is %r, expected %r", version, EXPECTED_VERSION)

    articles = tuple(
        _parse_article(a, f"$.data[{i}]", keep_extra) for i, a in enumerate(data)
    )
    dataset = Dataset(
        version=str(version),
        articles=articles,
        extra=_extras(doc, ("version", "data"), keep_extra),
    )
    if validate:
        _validate_strict(dataset)
    return dataset


def _validate_strict(dataset: Dataset) -> None:
    seen_ids: set[str] = set()
    for i, article in enumerate(dataset.articles):
        if not article.title:
            raise SchemaError("title must be non-empty", f"$.data[{i}]")
        for j, paragraph in enumerate(article.paragraphs):
            for k, qa in enumerate(paragraph.qas):
                path = f"$.data[{i}].paragraphs[{j}].qas[{k}]"
                if qa.id in seen_ids:
                    raise SchemaError(f"duplicate qa id {qa.id!r}", path)
                seen_ids.add(qa.id)
                if qa.is_impossible and qa.answers:
                    raise SchemaError(
                        f"impossible question {qa.id!r} has answers", path
                    )
                if not qa.is_impossible and not qa.answers:
                    raise SchemaError(
                        f"answerable question {qa.id!r} has no answers", path
                    )
    violations = validate_spans(dataset)
    if violations:
        v = violations[0]
        raise SchemaError(
            f"answer span of qa {v.qa_id!r} does not match its context: "
            f"expected {v.expected!r}, found {v.actual!r} at offset {v.answer_start}"
            + (f" (and {len(violations) - 1} more)" if len(violations) > 1 else ""),
            "$",
        )


def validate_spans(dataset: Dataset) -> list[SpanViolation]:
    """Check every answer and plausible answer against its context.

    Violations are returned as data, never raised; an empty list means the
    whole dataset satisfies the substring invariant.
    """
    violations = []
    for _, paragraph, qa in dataset.iter_qas():
        spans = list(qa.answers) + list(qa.plausible_answers or ())
        for span in spans:
            start = span.answer_start
            actual = ""
            if 0 <= start <= len(paragraph.context):
                actual = paragraph.context[start : start + len(span.text)]
            if start < 0 or actual != span.text:
                violations.append(
                    SpanViolation(
                        qa_id=qa.id,
                        expected=span.text,
                        actual=actual,
                        answer_start=start,
                    )
                )
    return violations


def dataset_stats(dataset: Dataset) -> DatasetStats:
    """Count articles, paragraphs and QA items."""
    paragraphs = 0
    qas = 0
    answerable = 0
    for article in dataset.articles:
        paragraphs += len(article.paragraphs)
        for paragraph in article.paragraphs:
            qas += len(paragraph.qas)
            answerable += sum(1 for qa in paragraph.qas if not qa.is_impossible)
    return DatasetStats(
        article_count=len(dataset.articles),
        paragraph_count=paragraphs,
        qa_count=qas,
        answerable_count=answerable,
        unanswerable_count=qas - answerable,
    )


def _span_to_json(span: AnswerSpan) -> dict[str, Any]:
    return {"text": span.text, "answer_start": span.answer_start}


def _qa_to_json(qa: QaItem) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "question": qa.question,
        "id": qa.id,
        "answers": [_span_to_json(s) for s in qa.answers],
        "is_impossible": qa.is_impossible,
    }
    if qa.plausible_answers is not None:
        obj["plausible_answers"] = [_span_to_json(s) for s in qa.plausible_answers]
    obj.update(qa.extra)
    return obj


def dataset_to_json(dataset: Dataset) -> dict[str, Any]:
    """Build the plain-dict SQuAD 2.0 representation of a Dataset."""
    obj: dict[str, Any] = {
        "version": dataset.version,
        "data": [
            {
                "title": article.title,
                "paragraphs": [
                    {
                        "context": paragraph.context,
                        "qas": [_qa_to_json(qa) for qa in paragraph.qas],
                        **paragraph.extra,
                    }
                    for paragraph in article.paragraphs
                ],
                **article.extra,
            }
            for article in dataset.articles
        ],
    }
    obj.update(dataset.extra)
    return obj


def serialize_dataset(dataset: Dataset) -> bytes:
    """Serialize a Dataset so that parse_dataset round-trips it exactly."""
    return json.dumps(dataset_to_json(dataset), ensure_ascii=False).encode("utf-8")


def load_dataset(path: str, **kwargs: Any) -> Dataset:
    with open(path, "rb") as fh:
        return parse_dataset(fh.read(), **kwargs)


def save_dataset(dataset: Dataset, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_dataset(dataset))
