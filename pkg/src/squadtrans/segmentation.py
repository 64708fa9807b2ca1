"""Sentence segmentation with exact offsets, plus CamelCase folding.

Splitting a context on every full stop breaks abbreviations apart, so
boundaries are only placed after sentence-final punctuation that is followed
by whitespace and a plausible sentence opener, and dots belonging to a known
abbreviation or a single-letter initial never end a sentence.
"""

from __future__ import annotations

import re
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

from .dataset import AnswerSpan

SENTENCE_FINAL = ".!?।"  # '.', '!', '?' and the Devanagari danda

# Compared after lowercasing and removing dots, so "e.g." matches "eg".
DEFAULT_ABBREVIATIONS = frozenset(
    {
        "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr",
        "vs", "etc", "eg", "ie", "al", "inc", "ltd", "fig",
    }
)

_OPENING_PUNCT = '"\'“‘([«'


class SpanLocationError(ValueError):
    """An answer span's offsets are inconsistent with the segmented context."""


@dataclass(frozen=True)
class Segment:
    """One sentence and its code-point offset into the original context."""

    text: str
    start: int

    @property
    def end(self) -> int:
        return self.start + len(self.text)


@dataclass(frozen=True)
class SegmentedContext:
    original: str
    segments: tuple[Segment, ...]


def normalize_camel_case(text: str) -> str:
    """Lowercase every whitespace-delimited token written in CamelCase.

    A token qualifies when some lowercase letter is immediately followed by
    an uppercase one ("YouTube", "iPad"); all-caps tokens like "NASA" do
    not. Everything else, including whitespace runs, is left untouched, and
    the output has the same code-point length as the input.
    """
    out = list(text)
    for match in re.finditer(r"\S+", text):
        token = match.group()
        if not _is_camel_case(token):
            continue
        for offset, ch in enumerate(token):
            lowered = ch.lower()
            if len(lowered) == 1:
                out[match.start() + offset] = lowered
    return "".join(out)


def _is_camel_case(token: str) -> bool:
    return any(a.islower() and b.isupper() for a, b in zip(token, token[1:]))


def _opens_sentence(ch: str) -> bool:
    if ch.isdigit() or ch.isupper():
        return True
    # Caseless letters (Devanagari and friends) can open a sentence too.
    if ch.isalpha() and not ch.islower():
        return True
    return ch in _OPENING_PUNCT


def _is_abbreviation_dot(context: str, dot: int, abbreviations: frozenset[str]) -> bool:
    """Decide whether the dot at ``dot`` belongs to an abbreviation.

    The preceding token is the maximal non-whitespace run ending at the dot.
    Its core (token minus the candidate dot) suppresses the boundary when it
    is a known abbreviation, a single-letter initial like "J.", or empty
    (a free-standing dot, as in spaced-out abbreviations like "L . A .").
    """
    token_start = dot
    while token_start > 0 and not context[token_start - 1].isspace():
        token_start -= 1
    core = context[token_start:dot]
    if not core:
        return True
    if len(core) == 1 and core.isalpha():
        return True
    return core.replace(".", "").lower() in abbreviations


def segment_sentences(
    context: str,
    abbreviations: frozenset[str] | set[str] = DEFAULT_ABBREVIATIONS,
) -> SegmentedContext:
    """Split a context into sentences, keeping exact code-point offsets.

    Boundaries sit after '.', '!', '?' or the danda when followed by
    whitespace and a sentence opener; a context without any boundary is a
    single segment. Splicing the segments back at their offsets always
    reproduces the original text.
    """
    abbreviations = frozenset(abbreviations)
    n = len(context)
    boundaries = []
    for i, ch in enumerate(context):
        if ch not in SENTENCE_FINAL:
            continue
        j = i + 1
        if j >= n or not context[j].isspace():
            continue
        while j < n and context[j].isspace():
            j += 1
        if j >= n or not _opens_sentence(context[j]):
            continue
        if ch == "." and _is_abbreviation_dot(context, i, abbreviations):
            continue
        boundaries.append(i)

    segments = []
    cursor = 0
    for b in boundaries:
        segments.append((cursor, b + 1))
        cursor = b + 1
    segments.append((cursor, n))

    final = []
    for lo, hi in segments:
        while lo < hi and context[lo].isspace():
            lo += 1
        while hi > lo and context[hi - 1].isspace():
            hi -= 1
        if lo < hi:
            final.append(Segment(text=context[lo:hi], start=lo))
    return SegmentedContext(original=context, segments=tuple(final))


def load_abbreviations(path: str) -> frozenset[str]:
    """Read extra abbreviations (one per line, '#' comments) and merge them
    with the built-in defaults."""
    entries = set(DEFAULT_ABBREVIATIONS)
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            token = line.split("#", 1)[0].strip()
            if token:
                entries.add(token.replace(".", "").lower())
    return frozenset(entries)


def locate_answer_segments(sc: SegmentedContext, span: AnswerSpan) -> tuple[int, int]:
    """Find the minimal contiguous segment range [i, j] overlapping a span.

    j > i only when the span straddles a detected boundary. Raises
    SpanLocationError when the span does not touch any segment or its
    offsets do not reproduce its text.
    """
    start = span.answer_start
    end = start + len(span.text)
    if not span.text:
        raise SpanLocationError("cannot locate an empty answer span")
    if start < 0 or sc.original[start:end] != span.text:
        raise SpanLocationError(
            f"span {span.text!r} at {start} does not match the context"
        )
    starts = [seg.start for seg in sc.segments]
    ends = [seg.end for seg in sc.segments]
    i = bisect_right(ends, start)
    j = bisect_left(starts, end) - 1
    if i > j or i >= len(sc.segments) or j < 0:
        raise SpanLocationError(
            f"span {span.text!r} at {start} lies outside every segment"
        )
    return i, j


def merge_segments(sc: SegmentedContext, rng: tuple[int, int]) -> SegmentedContext:
    """Replace segments i..j with one segment spanning the whole range,
    separator text included."""
    i, j = rng
    if not (0 <= i <= j < len(sc.segments)):
        raise ValueError(f"invalid segment range {rng!r}")
    if i == j:
        return sc
    first = sc.segments[i]
    last = sc.segments[j]
    merged = Segment(text=sc.original[first.start : last.end], start=first.start)
    return SegmentedContext(
        original=sc.original,
        segments=sc.segments[:i] + (merged,) + sc.segments[j + 1 :],
    )
