"""End-to-end dataset translation.

Per paragraph: segment the context, merge any segments an answer straddles
(union over all of the paragraph's QAs, so they share one consistent
translated context), translate each sentence through the cache, rebuild the
context, translate each question and answer, align every answer inside its
translated sentence, and finally run the script-cleanup passes with answer
offsets re-derived. A QA that cannot be carried through lands in the
failure report instead of the output dataset; nothing crashes the run
except unwritable outputs and cache write failures.
"""

from __future__ import annotations

import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any

from .align import (
    ALIGNED,
    AlignConfig,
    SimilarityFn,
    align_answer,
    compute_global_offset,
    lexical_similarity,
)
from .dataset import AnswerSpan, Article, Dataset, Paragraph, QaItem
from .segmentation import (
    DEFAULT_ABBREVIATIONS,
    SegmentedContext,
    SpanLocationError,
    load_abbreviations,
    locate_answer_segments,
    merge_segments,
    normalize_camel_case,
    segment_sentences,
)
from .translation import (
    DictBackend,
    HttpBackend,
    HttpBackendConfig,
    IdentityBackend,
    TranslatedContext,
    TranslationCache,
    TranslationError,
    build_translated_context,
    cached_translate,
)
from .transliteration import (
    HttpTransliterationEngine,
    fold_special_latin,
    transliterate_digits,
    transliterate_residue,
)

logger = logging.getLogger(__name__)

STAGE_TRANSLATION = "translation"
STAGE_ALIGNMENT = "alignment"
STAGE_TRANSLITERATION = "transliteration"


@dataclass
class PipelineConfig:
    src_lang: str = "en"
    tgt_lang: str = "mr"
    backend: str = "identity"  # identity | dict:FILE | http
    cache_path: str | None = None
    align: AlignConfig = field(default_factory=AlignConfig)
    align_plausible: bool = True
    workers: int = 1
    report_path: str | None = None
    seed: int = 0
    abbreviations_path: str | None = None
    http_backend: dict[str, Any] | None = None
    transliteration_engine: dict[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class FailureRecord:
    qa_id: str
    stage: str  # translation | alignment | transliteration
    reason: str
    base_score: float | None = None

    def to_json(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "qa_id": self.qa_id,
            "stage": self.stage,
            "reason": self.reason,
        }
        if self.base_score is not None:
            obj["base_score"] = self.base_score
        return obj


@dataclass(frozen=True)
class RunSummary:
    input_qa_count: int
    output_qa_count: int
    failure_count: int
    failures_by_stage: dict[str, int]
    elapsed_seconds: float
    workers: int

    def to_json(self) -> dict[str, Any]:
        return {
            "input_qa_count": self.input_qa_count,
            "output_qa_count": self.output_qa_count,
            "failure_count": self.failure_count,
            "failures_by_stage": dict(self.failures_by_stage),
            "elapsed_seconds": self.elapsed_seconds,
            "workers": self.workers,
        }


@dataclass(frozen=True)
class PipelineResult:
    dataset: Dataset
    failures: list[FailureRecord]
    summary: RunSummary


@dataclass(frozen=True)
class TranslatedExample:
    title: str
    context: str
    question: str
    answers: tuple[AnswerSpan, ...]
    plausible_answers: tuple[AnswerSpan, ...] | None
    is_impossible: bool


def make_backend(cfg: PipelineConfig) -> Any:
    if cfg.backend == "identity":
        return IdentityBackend()
    if cfg.backend.startswith("dict:"):
        return DictBackend.from_file(cfg.backend[len("dict:") :])
    if cfg.backend == "http":
        if not cfg.http_backend:
            raise ValueError(
                "the http backend needs an 'http_backend' section in the config file"
            )
        return HttpBackend(HttpBackendConfig(**cfg.http_backend))
    raise ValueError(f"unknown backend {cfg.backend!r}")


def make_engine(cfg: PipelineConfig) -> HttpTransliterationEngine | None:
    if not cfg.transliteration_engine:
        return None
    options = dict(cfg.transliteration_engine)
    src = options.pop("src", "en")
    tgt = options.pop("tgt", "hi")
    return HttpTransliterationEngine(
        HttpBackend(HttpBackendConfig(**options)), src=src, tgt=tgt
    )


def _dedupe_spans(spans: list[AnswerSpan]) -> tuple[AnswerSpan, ...]:
    seen = set()
    out = []
    for span in spans:
        key = (span.text, span.answer_start)
        if key not in seen:
            seen.add(key)
            out.append(span)
    return tuple(out)


def _nearest_occurrence(haystack: str, needle: str, hint: int) -> int | None:
    best = None
    start = 0
    while True:
        pos = haystack.find(needle, start)
        if pos == -1:
            break
        if best is None or abs(pos - hint) < abs(best - hint):
            best = pos
        start = pos + 1
    return best


class _SpanFailure:
    __slots__ = ("stage", "reason", "base_score")

    def __init__(self, stage: str, reason: str, base_score: float | None = None):
        self.stage = stage
        self.reason = reason
        self.base_score = base_score


class _Runner:
    """Per-run state shared by all workers: backend, cache, config."""

    def __init__(self, cfg, backend, cache, abbreviations, sim, engine):
        self.cfg = cfg
        self.backend = backend
        self.cache = cache
        self.abbreviations = abbreviations
        self.sim = sim
        self.engine = engine

    def translate_text(self, text: str, fold: bool = True) -> str:
        if fold:
            text = normalize_camel_case(text)
        if not text.strip():
            return text
        return cached_translate(
            self.cache, self.backend, text, self.cfg.src_lang, self.cfg.tgt_lang
        )

    def post_process(self, text: str) -> str:
        text = fold_special_latin(text)
        text = transliterate_digits(text)
        if self.engine is not None:
            text, _ = transliterate_residue(text, self.engine)
        return text

    def _qa_spans(self, qa: QaItem) -> tuple[AnswerSpan, ...]:
        spans = qa.answers
        if self.cfg.align_plausible and qa.plausible_answers:
            spans = spans + qa.plausible_answers
        return spans

    def _merged_segmentation(self, paragraph: Paragraph) -> SegmentedContext:
        sc = segment_sentences(paragraph.context, self.abbreviations)
        ranges = []
        for qa in paragraph.qas:
            for span in self._qa_spans(qa):
                try:
                    rng = locate_answer_segments(sc, span)
                except SpanLocationError:
                    continue  # surfaces as a per-span failure later
                if rng[1] > rng[0]:
                    ranges.append(rng)
        if not ranges:
            return sc
        ranges.sort()
        union = [list(ranges[0])]
        for a, b in ranges[1:]:
            if a <= union[-1][1]:
                union[-1][1] = max(union[-1][1], b)
            else:
                union.append([a, b])
        for a, b in reversed(union):
            sc = merge_segments(sc, (a, b))
        return sc

    def _align_span(
        self,
        span: AnswerSpan,
        sc: SegmentedContext,
        sentences_t: list[str],
        tc: TranslatedContext,
        context_final: str,
    ) -> tuple[AnswerSpan, float] | _SpanFailure:
        try:
            idx, _ = locate_answer_segments(sc, span)
        except SpanLocationError as exc:
            return _SpanFailure(STAGE_ALIGNMENT, f"source span invalid: {exc}")
        try:
            answer_t = self.translate_text(span.text)
        except TranslationError as exc:
            return _SpanFailure(
                STAGE_TRANSLATION, f"answer translation failed: {exc}"
            )
        sentence_t = sentences_t[idx]
        if not answer_t.strip() or not sentence_t.strip():
            return _SpanFailure(STAGE_ALIGNMENT, "empty translation")
        result = align_answer(sentence_t, answer_t, self.cfg.align, self.sim)
        if result.status != ALIGNED:
            return _SpanFailure(
                STAGE_ALIGNMENT,
                f"best phrase similarity {result.score:.3f} is below the "
                f"acceptance floor {self.cfg.align.min_accept_floor}",
                base_score=result.score,
            )
        start_global = compute_global_offset(tc, idx, result.start_in_sentence)

        final_text = self.post_process(result.answer_text)
        predicted = len(self.post_process(tc.full_text[:start_global]))
        if context_final[predicted : predicted + len(final_text)] == final_text:
            return AnswerSpan(text=final_text, answer_start=predicted), result.score
        pos = _nearest_occurrence(context_final, final_text, predicted)
        if pos is None:
            return _SpanFailure(
                STAGE_TRANSLITERATION,
                "aligned answer no longer occurs in the post-processed context",
            )
        return AnswerSpan(text=final_text, answer_start=pos), result.score

    def _process_qa(
        self,
        qa: QaItem,
        sc: SegmentedContext,
        sentences_t: list[str],
        tc: TranslatedContext,
        context_final: str,
        failures: list[FailureRecord],
    ) -> QaItem | None:
        try:
            question_final = self.post_process(self.translate_text(qa.question))
        except TranslationError as exc:
            failures.append(
                FailureRecord(
                    qa.id, STAGE_TRANSLATION, f"question translation failed: {exc}"
                )
            )
            return None

        aligned: list[AnswerSpan] = []
        scores: list[float] = []
        span_failures: list[_SpanFailure] = []
        for span in qa.answers:
            outcome = self._align_span(span, sc, sentences_t, tc, context_final)
            if isinstance(outcome, _SpanFailure):
                span_failures.append(outcome)
            else:
                aligned.append(outcome[0])
                scores.append(outcome[1])
        # A QA survives while at least one of its gold answers aligned;
        # answerable questions with none land in the failure report.
        if qa.answers and not aligned:
            worst = max(
                span_failures,
                key=lambda f: -1.0 if f.base_score is None else f.base_score,
            )
            failures.append(
                FailureRecord(qa.id, worst.stage, worst.reason, worst.base_score)
            )
            return None

        plausible_final: tuple[AnswerSpan, ...] | None = None
        if qa.plausible_answers is not None and self.cfg.align_plausible:
            kept = []
            for span in qa.plausible_answers:
                outcome = self._align_span(span, sc, sentences_t, tc, context_final)
                if not isinstance(outcome, _SpanFailure):
                    kept.append(outcome[0])
                    scores.append(outcome[1])
            plausible_final = _dedupe_spans(kept)

        extra = qa.extra
        if scores:
            # worst alignment score of the item, for review prioritization
            extra = dict(qa.extra)
            extra["align_score"] = round(min(scores), 6)
        return QaItem(
            id=qa.id,
            question=question_final,
            is_impossible=qa.is_impossible,
            answers=_dedupe_spans(aligned),
            plausible_answers=plausible_final,
            extra=extra,
        )

    def process_paragraph(
        self, paragraph: Paragraph
    ) -> tuple[Paragraph | None, list[FailureRecord]]:
        failures: list[FailureRecord] = []
        sc = self._merged_segmentation(paragraph)
        try:
            sentences_t = [self.translate_text(seg.text) for seg in sc.segments]
            tc = build_translated_context(sentences_t)
        except (TranslationError, ValueError) as exc:
            return None, [
                FailureRecord(
                    qa.id, STAGE_TRANSLATION, f"context translation failed: {exc}"
                )
                for qa in paragraph.qas
            ]
        context_final = self.post_process(tc.full_text)

        out_qas = []
        for qa in paragraph.qas:
            out = self._process_qa(qa, sc, sentences_t, tc, context_final, failures)
            if out is not None:
                out_qas.append(out)
        if not out_qas:
            return None, failures
        return (
            Paragraph(context=context_final, qas=tuple(out_qas), extra=paragraph.extra),
            failures,
        )


def run_pipeline(
    dataset: Dataset,
    cfg: PipelineConfig | None = None,
    backend: Any = None,
    sim: SimilarityFn = lexical_similarity,
    engine: Any = None,
) -> PipelineResult:
    """Translate a whole dataset; see the module docstring for the shape.

    Every input QA ends up either in the returned dataset or in the failure
    list. Results are reassembled in input order, so the output bytes do
    not depend on the worker count, and the translation cache makes reruns
    free. backend and engine objects may be passed directly; otherwise they
    are built from the config.
    """
    cfg = cfg or PipelineConfig()
    started = time.monotonic()
    if backend is None:
        backend = make_backend(cfg)
    abbreviations = (
        load_abbreviations(cfg.abbreviations_path)
        if cfg.abbreviations_path
        else DEFAULT_ABBREVIATIONS
    )
    if engine is None:
        engine = make_engine(cfg)

    input_qa_count = sum(1 for _ in dataset.iter_qas())
    failures: list[FailureRecord] = []
    out_articles: list[Article] = []

    with TranslationCache(cfg.cache_path) as cache:
        runner = _Runner(cfg, backend, cache, abbreviations, sim, engine)

        titles: dict[int, str] = {}
        title_errors: dict[int, str] = {}
        for ai, article in enumerate(dataset.articles):
            try:
                titles[ai] = runner.post_process(
                    runner.translate_text(article.title, fold=False)
                )
            except TranslationError as exc:
                title_errors[ai] = str(exc)

        tasks = [
            (ai, pi, paragraph)
            for ai, article in enumerate(dataset.articles)
            if ai not in title_errors
            for pi, paragraph in enumerate(article.paragraphs)
        ]
        results: dict[tuple[int, int], tuple[Paragraph | None, list[FailureRecord]]] = {}
        if cfg.workers == 1 or len(tasks) <= 1:
            for ai, pi, paragraph in tasks:
                results[(ai, pi)] = runner.process_paragraph(paragraph)
        else:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                pending = {
                    pool.submit(runner.process_paragraph, paragraph): (ai, pi)
                    for ai, pi, paragraph in tasks
                }
                for future in as_completed(pending):
                    results[pending[future]] = future.result()

        for ai, article in enumerate(dataset.articles):
            if ai in title_errors:
                for paragraph in article.paragraphs:
                    failures.extend(
                        FailureRecord(
                            qa.id,
                            STAGE_TRANSLATION,
                            f"title translation failed: {title_errors[ai]}",
                        )
                        for qa in paragraph.qas
                    )
                continue
            out_paragraphs = []
            for pi in range(len(article.paragraphs)):
                para_out, para_failures = results[(ai, pi)]
                failures.extend(para_failures)
                if para_out is not None:
                    out_paragraphs.append(para_out)
            if out_paragraphs:
                out_articles.append(
                    Article(
                        title=titles[ai],
                        paragraphs=tuple(out_paragraphs),
                        extra=article.extra,
                    )
                )

    out_dataset = Dataset(
        version=dataset.version, articles=tuple(out_articles), extra=dataset.extra
    )
    by_stage: dict[str, int] = {}
    for failure in failures:
        by_stage[failure.stage] = by_stage.get(failure.stage, 0) + 1
    output_qa_count = sum(1 for _ in out_dataset.iter_qas())
    summary = RunSummary(
        input_qa_count=input_qa_count,
        output_qa_count=output_qa_count,
        failure_count=len(failures),
        failures_by_stage=by_stage,
        elapsed_seconds=time.monotonic() - started,
        workers=cfg.workers,
    )
    logger.info(
        "pipeline done: %d in, %d out, %d failed in %.1fs",
        input_qa_count,
        output_qa_count,
        len(failures),
        summary.elapsed_seconds,
    )
    return PipelineResult(dataset=out_dataset, failures=failures, summary=summary)


def translate_example(
    article_title: str,
    paragraph: Paragraph,
    qa: QaItem,
    cfg: PipelineConfig | None = None,
    backend: Any = None,
    sim: SimilarityFn = lexical_similarity,
) -> TranslatedExample | FailureRecord:
    """Translate one QA against its paragraph; the single-example view of
    run_pipeline."""
    if all(existing.id != qa.id for existing in paragraph.qas):
        raise ValueError(f"qa {qa.id!r} does not belong to the given paragraph")
    mini = Dataset(
        version="v2.0",
        articles=(
            Article(
                title=article_title,
                paragraphs=(Paragraph(context=paragraph.context, qas=(qa,)),),
            ),
        ),
    )
    result = run_pipeline(mini, cfg, backend=backend, sim=sim)
    if result.failures:
        return result.failures[0]
    article = result.dataset.articles[0]
    out_paragraph = article.paragraphs[0]
    out_qa = out_paragraph.qas[0]
    return TranslatedExample(
        title=article.title,
        context=out_paragraph.context,
        question=out_qa.question,
        answers=out_qa.answers,
        plausible_answers=out_qa.plausible_answers,
        is_impossible=out_qa.is_impossible,
    )


def sample_gold(dataset: Dataset, n: int, seed: int = 0) -> Dataset:
    """Uniform sample of n QAs without replacement, kept in input order with
    their full articles/paragraphs so the records survive review intact."""
    total = sum(1 for _ in dataset.iter_qas())
    if n < 0 or n > total:
        raise ValueError(f"cannot sample {n} of {total} QAs")
    chosen = set(random.Random(seed).sample(range(total), n))
    index = 0
    out_articles = []
    for article in dataset.articles:
        out_paragraphs = []
        for paragraph in article.paragraphs:
            kept = []
            for qa in paragraph.qas:
                if index in chosen:
                    kept.append(qa)
                index += 1
            if kept:
                out_paragraphs.append(
                    Paragraph(
                        context=paragraph.context, qas=tuple(kept), extra=paragraph.extra
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
        version=dataset.version, articles=tuple(out_articles), extra=dataset.extra
    )
