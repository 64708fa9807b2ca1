"""Locate a translated answer inside a translated sentence.

Translation moves answers around and reshapes them, so the original
character offsets are useless afterwards. The recovery works on word
boundaries: score every capped-length phrase of the sentence against the
separately translated answer, take the best-scoring phrase as the base, then
greedily grow it one word at a time while the score stays within a fixed
fraction of the base maximum. The grown phrase becomes the new answer and
its offset is exact by construction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable

from .translation import TranslatedContext

ALIGNED = "aligned"
BELOW_FLOOR = "below_floor"

SimilarityFn = Callable[[str, str], float]


@dataclass(frozen=True)
class Word:
    text: str
    start: int


@dataclass(frozen=True)
class WordSequence:
    words: tuple[Word, ...]
    sentence: str


@dataclass(frozen=True)
class SimilarityMatrix:
    """Scores for every word-boundary phrase (i, j) up to the length cap."""

    scores: dict[tuple[int, int], float]


@dataclass(frozen=True)
class AlignConfig:
    """Knobs for the phrase search.

    threshold_ratio is the fraction of the base maximum a grown phrase must
    keep to be adopted (0.99 = allow a 1% drop); exactly 1.0 disables
    extension, since no capped phrase can strictly beat the matrix maximum.
    max_phrase_words of None means the per-answer default of
    max(2 * answer_word_count + 3, 8).
    """

    threshold_ratio: float = 0.99
    min_accept_floor: float = 0.35
    max_phrase_words: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold_ratio <= 1.0:
            raise ValueError("threshold_ratio must be in (0, 1]")
        if not 0.0 <= self.min_accept_floor <= 1.0:
            raise ValueError("min_accept_floor must be in [0, 1]")
        if self.max_phrase_words is not None and self.max_phrase_words < 1:
            raise ValueError("max_phrase_words must be >= 1")

    def resolve_cap(self, answer_word_count: int) -> int:
        if self.max_phrase_words is not None:
            return self.max_phrase_words
        return max(2 * answer_word_count + 3, 8)


@dataclass(frozen=True)
class AlignmentResult:
    status: str  # ALIGNED or BELOW_FLOOR
    answer_text: str
    start_in_sentence: int
    score: float


def tokenize_words(sentence: str) -> WordSequence:
    """Split on whitespace, recording each word's code-point offset."""
    words = []
    i = 0
    n = len(sentence)
    while i < n:
        if sentence[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not sentence[j].isspace():
            j += 1
        words.append(Word(text=sentence[i:j], start=i))
        i = j
    return WordSequence(words=tuple(words), sentence=sentence)


def _token_f1(a_tokens: list[str], b_tokens: list[str]) -> float:
    overlap = sum((Counter(a_tokens) & Counter(b_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(a_tokens)
    recall = overlap / len(b_tokens)
    return 2 * precision * recall / (precision + recall)


def _bigram_dice(a: str, b: str) -> float:
    a_grams = [a[i : i + 2] for i in range(len(a) - 1)]
    b_grams = [b[i : i + 2] for i in range(len(b) - 1)]
    if not a_grams and not b_grams:
        return 1.0 if a == b else 0.0
    if not a_grams or not b_grams:
        return 0.0
    overlap = sum((Counter(a_grams) & Counter(b_grams)).values())
    return 2 * overlap / (len(a_grams) + len(b_grams))


def lexical_similarity(a: str, b: str) -> float:
    """Default scorer: half token-level F1, half character-bigram Dice.

    Symmetric, in [0, 1], and exactly 1.0 for equal non-empty strings. An
    embedding-backed scorer with the same signature can be swapped in
    wherever a similarity function is accepted.
    """
    a = a.strip()
    b = b.strip()
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return 0.5 * _token_f1(a.split(), b.split()) + 0.5 * _bigram_dice(a, b)


def phrase_text(ws: WordSequence, i: int, j: int) -> str:
    """Sentence text from word i's start to word j's end, spacing intact."""
    return ws.sentence[ws.words[i].start : ws.words[j].start + len(ws.words[j].text)]


def build_similarity_matrix(
    ws: WordSequence,
    translated_answer: str,
    cfg: AlignConfig | None = None,
    sim: SimilarityFn = lexical_similarity,
) -> SimilarityMatrix:
    """Score every phrase of at most the capped number of words."""
    if not ws.words:
        raise ValueError("word sequence is empty")
    if not translated_answer.strip():
        raise ValueError("translated answer is empty")
    cfg = cfg or AlignConfig()
    cap = cfg.resolve_cap(len(translated_answer.split()))
    scores: dict[tuple[int, int], float] = {}
    n = len(ws.words)
    for i in range(n):
        for j in range(i, min(i + cap, n)):
            scores[(i, j)] = sim(phrase_text(ws, i, j), translated_answer)
    return SimilarityMatrix(scores=scores)


def find_base_phrase(matrix: SimilarityMatrix) -> tuple[int, int, float]:
    """Best-scoring phrase; ties go to fewer words, then the leftmost."""
    if not matrix.scores:
        raise ValueError("similarity matrix is empty")
    best: tuple[int, int] | None = None
    best_score = -1.0
    for (i, j), score in matrix.scores.items():
        if best is None:
            better = True
        elif score != best_score:
            better = score > best_score
        elif (j - i) != (best[1] - best[0]):
            better = (j - i) < (best[1] - best[0])
        else:
            better = i < best[0]
        if better:
            best = (i, j)
            best_score = score
    assert best is not None
    return best[0], best[1], best_score


def extend_phrase(
    ws: WordSequence,
    base: tuple[int, int],
    translated_answer: str,
    cfg: AlignConfig | None = None,
    sim: SimilarityFn = lexical_similarity,
) -> tuple[int, int]:
    """Grow the base phrase while the score keeps the threshold.

    Each round scores the phrase grown one word to the left and one to the
    right; of the candidates at or above threshold_ratio times the base
    score, the higher-scoring side is adopted (right wins exact ties). Stops
    at the word bounds, the phrase-length cap, or when neither side
    qualifies. The threshold reference is the fixed base score, never
    re-maximized while growing.
    """
    i, j = base
    n = len(ws.words)
    if not (0 <= i <= j < n):
        raise ValueError(f"invalid base phrase {base!r}")
    cfg = cfg or AlignConfig()
    cap = cfg.resolve_cap(len(translated_answer.split()))
    base_score = sim(phrase_text(ws, i, j), translated_answer)

    if cfg.threshold_ratio >= 1.0:
        def qualifies(score: float) -> bool:
            return score > base_score
    else:
        threshold = cfg.threshold_ratio * base_score

        def qualifies(score: float) -> bool:
            return score >= threshold

    while j - i + 1 < cap:
        chosen = None
        chosen_score = -1.0
        if j + 1 < n:
            right = sim(phrase_text(ws, i, j + 1), translated_answer)
            if qualifies(right):
                chosen = "right"
                chosen_score = right
        if i > 0:
            left = sim(phrase_text(ws, i - 1, j), translated_answer)
            if qualifies(left) and left > chosen_score:
                chosen = "left"
        if chosen is None:
            break
        if chosen == "right":
            j += 1
        else:
            i -= 1
    return i, j


def align_answer(
    sentence: str,
    translated_answer: str,
    cfg: AlignConfig | None = None,
    sim: SimilarityFn = lexical_similarity,
) -> AlignmentResult:
    """Full phrase search: tokenize, score, pick the base, extend.

    Returns BELOW_FLOOR (empty answer text) when even the best base phrase
    scores under min_accept_floor; the score carried back is then the base
    maximum, useful for failure reporting.
    """
    if not sentence.strip():
        raise ValueError("sentence must be non-empty")
    if not translated_answer.strip():
        raise ValueError("translated answer must be non-empty")
    cfg = cfg or AlignConfig()
    ws = tokenize_words(sentence)
    matrix = build_similarity_matrix(ws, translated_answer, cfg, sim)
    i, j, base_score = find_base_phrase(matrix)
    if base_score < cfg.min_accept_floor:
        return AlignmentResult(
            status=BELOW_FLOOR, answer_text="", start_in_sentence=-1, score=base_score
        )
    i2, j2 = extend_phrase(ws, (i, j), translated_answer, cfg, sim)
    text = phrase_text(ws, i2, j2)
    score = base_score if (i2, j2) == (i, j) else sim(text, translated_answer)
    return AlignmentResult(
        status=ALIGNED,
        answer_text=text,
        start_in_sentence=ws.words[i2].start,
        score=score,
    )


def compute_global_offset(
    tc: TranslatedContext, sentence_index: int, start_in_sentence: int
) -> int:
    """Map a within-sentence offset to an offset in the full translated
    context."""
    if not 0 <= sentence_index < len(tc.sentence_offsets):
        raise IndexError(f"sentence index {sentence_index} out of range")
    if start_in_sentence < 0:
        raise IndexError(f"negative offset {start_in_sentence}")
    return tc.sentence_offsets[sentence_index] + start_in_sentence
