"""squadtrans: translate SQuAD 2.0 datasets while keeping answer spans valid."""

from .align import (
    ALIGNED,
    BELOW_FLOOR,
    AlignConfig,
    AlignmentResult,
    align_answer,
    build_similarity_matrix,
    compute_global_offset,
    extend_phrase,
    find_base_phrase,
    lexical_similarity,
    tokenize_words,
)
from .dataset import (
    AnswerSpan,
    Article,
    Dataset,
    DatasetError,
    DatasetParseError,
    DatasetStats,
    Paragraph,
    QaItem,
    SchemaError,
    SpanViolation,
    dataset_stats,
    load_dataset,
    parse_dataset,
    save_dataset,
    serialize_dataset,
    validate_spans,
)
from .evaluation import EvalReport, bleu, evaluate, exact_match, f1, normalize_answer
from .pipeline import (
    FailureRecord,
    PipelineConfig,
    PipelineResult,
    RunSummary,
    run_pipeline,
    sample_gold,
    translate_example,
)
from .review import ReviewSession, ReviewVerdict, create_app
from .segmentation import (
    Segment,
    SegmentedContext,
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
    TranslationRecord,
    build_translated_context,
    cached_translate,
)
from .transliteration import (
    fold_special_latin,
    transliterate_digits,
    transliterate_residue,
)

__version__ = "0.1.0"
