"""Post-translation script cleanup: Devanagari digits, diacritic folding,
and residual-Latin handling.

Translation engines tend to leave ASCII digits, accented Latin characters
and untransliterated named entities behind in Devanagari output. These
passes clean that up; the length-changing one (the optional engine) reports
what it touched so callers can re-derive answer offsets.
"""

from __future__ import annotations

import logging
import unicodedata
from functools import lru_cache
from typing import Any

logger = logging.getLogger(__name__)

# ASCII 0-9 onto U+0966..U+096F, one to one.
DIGIT_MAP = {ord("0") + i: chr(0x0966 + i) for i in range(10)}


def transliterate_digits(text: str) -> str:
    """Replace every ASCII digit with its Devanagari counterpart.

    Length-preserving and idempotent; everything that is not an ASCII digit
    passes through untouched.
    """
    return text.translate(DIGIT_MAP)


@lru_cache(maxsize=4096)
def _fold_char(ch: str) -> str:
    if ch.isascii() or not _is_latin(ch):
        return ch
    decomposed = unicodedata.normalize("NFD", ch)
    if len(decomposed) < 2:
        return ch
    base = decomposed[0]
    if (
        base.isascii()
        and base.isalpha()
        and all(unicodedata.combining(c) for c in decomposed[1:])
    ):
        return base
    return ch


@lru_cache(maxsize=4096)
def _is_latin(ch: str) -> bool:
    return "LATIN" in unicodedata.name(ch, "")


def fold_special_latin(text: str) -> str:
    """Strip diacritics from Latin letters, leaving other scripts alone.

    Precomposed characters decompose to their ASCII base (é -> e); combining
    marks that follow an ASCII letter (already-decomposed input) are
    dropped. Devanagari combining marks survive because their base is not
    ASCII. Idempotent.
    """
    out: list[str] = []
    for ch in text:
        if unicodedata.combining(ch) and out and out[-1].isascii() and out[-1].isalpha():
            continue
        out.append(_fold_char(ch))
    return "".join(out)


def _latin_runs(text: str) -> list[tuple[int, int]]:
    runs = []
    start = None
    for i, ch in enumerate(text):
        if ch.isalpha() and _is_latin(ch):
            if start is None:
                start = i
        elif start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(text)))
    return runs


def transliterate_residue(
    text: str, engine: Any = None
) -> tuple[str, list[str]]:
    """Convert leftover Latin-letter runs through a transliteration engine.

    With no engine the text is returned unchanged and every maximal Latin
    run is reported as a flag. With an engine, each run is sent for
    transliteration independently; a failed run is left in place and
    flagged, never aborting the rest of the text.
    """
    runs = _latin_runs(text)
    if engine is None:
        return text, [text[a:b] for a, b in runs]

    flags = []
    pieces = []
    cursor = 0
    for a, b in runs:
        run = text[a:b]
        pieces.append(text[cursor:a])
        try:
            pieces.append(engine.transliterate(run))
        except Exception as exc:
            logger.warning("transliteration of %r failed: %s", run, exc)
            pieces.append(run)
            flags.append(run)
        cursor = b
    pieces.append(text[cursor:])
    return "".join(pieces), flags


class HttpTransliterationEngine:
    """Transliteration over the same templated HTTP client as translation
    backends; src/tgt placeholders carry the script pair."""

    def __init__(self, backend: Any, src: str = "en", tgt: str = "hi"):
        self._backend = backend
        self._src = src
        self._tgt = tgt

    def transliterate(self, text: str) -> str:
        return self._backend.translate(text, self._src, self._tgt)
