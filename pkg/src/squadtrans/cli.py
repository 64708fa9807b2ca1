"""Command-line interface.

Subcommands: translate, validate, stats, sample-gold, evaluate,
serve-review. An optional JSON config file mirrors the flags (keys are the
flag names with dashes replaced by underscores); explicit flags win.

Exit codes: 0 success, 1 fatal error, 2 completed with failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .align import AlignConfig
from .dataset import (
    DatasetError,
    dataset_stats,
    load_dataset,
    save_dataset,
    validate_spans,
)
from .translation import CacheError
from .evaluation import evaluate
from .pipeline import PipelineConfig, run_pipeline, sample_gold
from .review import ReviewSession, create_app

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_WITH_FAILURES = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="squadtrans",
        description="Translate SQuAD 2.0 datasets with span-preserving alignment",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("translate", help="translate a dataset end to end")
    p.add_argument("--input", required=True, help="source SQuAD 2.0 JSON file")
    p.add_argument("--output", required=True, help="translated dataset path")
    p.add_argument("--cache", default=None, help="JSONL translation cache path")
    p.add_argument(
        "--backend",
        default="identity",
        help="identity | dict:FILE (JSON word map) | http (needs config file)",
    )
    p.add_argument("--src", default="en", help="source language code")
    p.add_argument("--tgt", default="mr", help="target language code")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument(
        "--min-score",
        type=float,
        default=0.35,
        help="reject alignments whose base similarity is below this (0 keeps all)",
    )
    p.add_argument("--threshold-ratio", type=float, default=0.99)
    p.add_argument("--max-phrase-words", type=int, default=None)
    p.add_argument("--report", default=None, help="failure report path (JSONL)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--abbreviations", default=None, help="extra abbreviations file")
    p.add_argument(
        "--skip-plausible",
        action="store_true",
        help="drop plausible answers instead of aligning them",
    )
    p.add_argument("--config", default=None, help="JSON config file mirroring flags")

    p = sub.add_parser("validate", help="check every answer span in a dataset")
    p.add_argument("--input", required=True)

    p = sub.add_parser("stats", help="print dataset statistics")
    p.add_argument("--input", required=True)

    p = sub.add_parser("sample-gold", help="sample review candidates")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("evaluate", help="score a predictions file against gold")
    p.add_argument("--gold", required=True, help="gold dataset (SQuAD JSON)")
    p.add_argument("--predictions", required=True, help="JSON map of id -> answer")
    p.add_argument("--output", default=None, help="write the report JSON here too")

    p = sub.add_parser("serve-review", help="run the review API/UI server")
    p.add_argument("--candidates", required=True, help="candidate dataset (SQuAD JSON)")
    p.add_argument("--verdicts", required=True, help="verdict log path (JSONL)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static-dir", default=None, help="directory with the built UI")

    return parser


def _merge_config_file(args: argparse.Namespace, argv: list[str]) -> dict:
    """Fill unset flags from the JSON config file; explicit flags win.

    Returns the nested sections (http_backend, transliteration_engine) that
    have no flag equivalent.
    """
    if not getattr(args, "config", None):
        return {}
    with open(args.config, encoding="utf-8") as fh:
        config = json.load(fh)
    nested = {
        k: config[k]
        for k in ("http_backend", "transliteration_engine")
        if k in config
    }
    for key, value in config.items():
        if key in nested or not hasattr(args, key):
            continue
        flag = "--" + key.replace("_", "-")
        if flag in argv:
            continue
        setattr(args, key, value)
    return nested


def _cmd_translate(args: argparse.Namespace) -> int:
    extra: dict = {
        k: v for k, v in getattr(args, "nested_config", {}).items()
    }
    cfg = PipelineConfig(
        src_lang=args.src,
        tgt_lang=args.tgt,
        backend=args.backend,
        cache_path=args.cache,
        align=AlignConfig(
            threshold_ratio=args.threshold_ratio,
            min_accept_floor=args.min_score,
            max_phrase_words=args.max_phrase_words,
        ),
        align_plausible=not args.skip_plausible,
        workers=args.jobs,
        report_path=args.report,
        seed=args.seed,
        abbreviations_path=args.abbreviations,
        **extra,
    )
    dataset = load_dataset(args.input, validate=False)
    result = run_pipeline(dataset, cfg)
    save_dataset(result.dataset, args.output)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            for failure in result.failures:
                fh.write(json.dumps(failure.to_json(), ensure_ascii=False) + "\n")
    print(json.dumps(result.summary.to_json(), indent=2))
    return EXIT_WITH_FAILURES if result.failures else EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input, validate=False)
    violations = validate_spans(dataset)
    for v in violations:
        print(
            f"{v.qa_id}: expected {v.expected!r} at {v.answer_start}, "
            f"found {v.actual!r}"
        )
    print(f"{len(violations)} violation(s) in {args.input}")
    return EXIT_WITH_FAILURES if violations else EXIT_OK


def _cmd_stats(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input, validate=False)
    stats = dataset_stats(dataset)
    print(
        json.dumps(
            {
                "article_count": stats.article_count,
                "paragraph_count": stats.paragraph_count,
                "qa_count": stats.qa_count,
                "answerable_count": stats.answerable_count,
                "unanswerable_count": stats.unanswerable_count,
            },
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_sample_gold(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input, validate=False)
    sampled = sample_gold(dataset, args.count, seed=args.seed)
    save_dataset(sampled, args.output)
    print(f"wrote {args.count} candidate QAs to {args.output}")
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    gold = load_dataset(args.gold, validate=False)
    with open(args.predictions, encoding="utf-8") as fh:
        predictions = json.load(fh)
    if not isinstance(predictions, dict):
        raise ValueError("predictions file must be a JSON object of id -> answer")
    report = evaluate(predictions, gold)
    text = json.dumps(report.to_json(), indent=2, ensure_ascii=False)
    print(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def _cmd_serve_review(args: argparse.Namespace) -> int:
    import uvicorn

    session = ReviewSession.from_files(args.candidates, args.verdicts)
    app = create_app(session, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "translate": _cmd_translate,
    "validate": _cmd_validate,
    "stats": _cmd_stats,
    "sample-gold": _cmd_sample_gold,
    "evaluate": _cmd_evaluate,
    "serve-review": _cmd_serve_review,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.nested_config = _merge_config_file(args, argv)
        return _COMMANDS[args.command](args)
    except (DatasetError, CacheError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
