"""Sentence-level translation backends, a persistent cache, and the
translated-context builder.

Backends are pluggable: anything with a ``backend_id`` string and a
``translate(text, src, tgt)`` method works. The cache is append-only JSONL
so a crashed run loses at most one line and a replay changes nothing.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from string import Template
from typing import Any

import requests

logger = logging.getLogger(__name__)


class TranslationError(Exception):
    """Base class for backend failures."""


class TransportError(TranslationError):
    """The service could not be reached (connection, timeout)."""


class RateLimitError(TranslationError):
    """The service answered 429; retry_after is seconds when provided."""

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class ServiceError(TranslationError):
    """The service answered with a non-success status or a bad body."""

    def __init__(self, message: str, status_code: int | None = None):
        super().__init__(message)
        self.status_code = status_code


class CacheError(Exception):
    """A cache write failed; fatal, to avoid silently re-billing calls."""


@dataclass(frozen=True)
class TranslationRecord:
    source_text: str
    target_text: str
    src_lang: str
    tgt_lang: str
    backend_id: str

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.source_text, self.src_lang, self.tgt_lang, self.backend_id)


@dataclass(frozen=True)
class TranslatedContext:
    """A context rebuilt from per-sentence translations.

    sentence_offsets[i] is the code-point start of sentence i in full_text;
    slicing full_text there for the sentence's length recovers it exactly.
    """

    full_text: str
    sentence_offsets: tuple[int, ...]


class IdentityBackend:
    """Returns the input unchanged; the reference backend for tests and
    dry runs."""

    backend_id = "identity"

    def translate(self, text: str, src: str, tgt: str) -> str:
        return text


class DictBackend:
    """Word-for-word translation through a fixed mapping.

    Tokens keep their leading/trailing punctuation; only the alphanumeric
    core is looked up, and unknown words pass through unchanged. Output
    tokens are joined by single spaces.
    """

    def __init__(self, mapping: dict[str, str], backend_id: str = "dict"):
        self.mapping = dict(mapping)
        self.backend_id = backend_id

    @classmethod
    def from_file(cls, path: str) -> "DictBackend":
        with open(path, encoding="utf-8") as fh:
            mapping = json.load(fh)
        if not isinstance(mapping, dict):
            raise ValueError(f"{path}: expected a JSON object of word mappings")
        return cls(mapping, backend_id=f"dict:{os.path.basename(path)}")

    def translate(self, text: str, src: str, tgt: str) -> str:
        out = []
        for token in text.split():
            i, j = 0, len(token)
            while i < j and not token[i].isalnum():
                i += 1
            while j > i and not token[j - 1].isalnum():
                j -= 1
            core = token[i:j]
            out.append(token[:i] + self.mapping.get(core, core) + token[j:])
        return " ".join(out)


class TokenBucket:
    """Simple thread-safe rate limiter: ``rate`` tokens per second, up to
    ``burst`` saved up."""

    def __init__(self, rate: float, burst: int = 1):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.burst = max(1, burst)
        self._tokens = float(self.burst)
        self._last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.burst, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


@dataclass
class HttpBackendConfig:
    """Adapter settings for an arbitrary JSON-over-HTTP translation service.

    body_template is a JSON document whose string values may contain $text,
    $src and $tgt placeholders; headers_template likewise with $api_key
    (read from the api_key_env environment variable). response_field is a
    dot path into the response JSON, with integer steps indexing arrays,
    e.g. "data.translations.0.text".
    """

    url: str
    body_template: str = '{"text": "$text", "source": "$src", "target": "$tgt"}'
    headers_template: str = "{}"
    response_field: str = "translation"
    api_key_env: str = "SQUADTRANS_API_KEY"
    timeout: float = 30.0
    max_retries: int = 3
    backoff_base: float = 0.5
    rate_limit: float | None = None
    rate_burst: int = 1
    backend_id: str = "http"


def _fill_template(value: Any, mapping: dict[str, str]) -> Any:
    if isinstance(value, str):
        return Template(value).safe_substitute(mapping)
    if isinstance(value, list):
        return [_fill_template(v, mapping) for v in value]
    if isinstance(value, dict):
        return {k: _fill_template(v, mapping) for k, v in value.items()}
    return value


def _walk_field(doc: Any, path: str) -> Any:
    node = doc
    for step in path.split("."):
        if isinstance(node, list):
            try:
                node = node[int(step)]
            except (ValueError, IndexError) as exc:
                raise ServiceError(f"response field {path!r} not found") from exc
        elif isinstance(node, dict) and step in node:
            node = node[step]
        else:
            raise ServiceError(f"response field {path!r} not found")
    return node


class HttpBackend:
    """POSTs each sentence to a configured endpoint with bounded retries,
    exponential backoff and an optional token-bucket rate limit."""

    def __init__(self, config: HttpBackendConfig, session: requests.Session | None = None):
        self.config = config
        self.backend_id = config.backend_id
        self._session = session or requests.Session()
        self._body = json.loads(config.body_template)
        self._headers = json.loads(config.headers_template)
        self._bucket = (
            TokenBucket(config.rate_limit, config.rate_burst)
            if config.rate_limit
            else None
        )

    def translate(self, text: str, src: str, tgt: str) -> str:
        if not text.strip():
            raise ValueError("text must be non-empty after trimming")
        mapping = {"text": text, "src": src, "tgt": tgt,
                   "api_key": os.environ.get(self.config.api_key_env, "")}
        body = _fill_template(self._body, mapping)
        headers = _fill_template(self._headers, mapping)

        last_error: TranslationError | None = None
        for attempt in range(self.config.max_retries + 1):
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                response = self._session.post(
                    self.config.url, json=body, headers=headers,
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                last_error = TransportError(f"request failed: {exc}")
            else:
                if response.status_code == 429:
                    retry_after = _parse_retry_after(response.headers.get("Retry-After"))
                    last_error = RateLimitError(
                        "service rate limit hit", retry_after=retry_after
                    )
                elif response.status_code >= 500:
                    last_error = ServiceError(
                        f"service error {response.status_code}",
                        status_code=response.status_code,
                    )
                elif response.status_code >= 400:
                    raise ServiceError(
                        f"request rejected with status {response.status_code}",
                        status_code=response.status_code,
                    )
                else:
                    try:
                        doc = response.json()
                    except ValueError as exc:
                        raise ServiceError("response is not JSON") from exc
                    value = _walk_field(doc, self.config.response_field)
                    if not isinstance(value, str):
                        raise ServiceError(
                            f"response field {self.config.response_field!r} "
                            "is not a string"
                        )
                    return value
            if attempt < self.config.max_retries:
                delay = self.config.backoff_base * (2**attempt)
                if isinstance(last_error, RateLimitError) and last_error.retry_after:
                    delay = max(delay, last_error.retry_after)
                time.sleep(delay)
        assert last_error is not None
        raise last_error


def _parse_retry_after(value: str | None) -> float | None:
    if value is None:
        return None
    try:
        return float(value)
    except ValueError:
        return None


class TranslationCache:
    """Append-only JSONL store of TranslationRecords.

    The whole file is loaded into an in-memory index at open, so reads are
    lock-free; writes go through a single lock and are flushed per record.
    A truncated final line (crashed writer) is skipped with a warning.
    """

    def __init__(self, path: str | None):
        self.path = path
        self._index: dict[tuple[str, str, str, str], str] = {}
        self._lock = threading.Lock()
        self._fh = None
        if path is not None:
            self._load(path)
            try:
                self._fh = open(path, "a", encoding="utf-8")
            except OSError as exc:
                raise CacheError(f"cannot open cache {path!r} for append: {exc}") from exc

    def _load(self, path: str) -> None:
        if not os.path.exists(path):
            return
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                record = TranslationRecord(
                    source_text=obj["source_text"],
                    target_text=obj["target_text"],
                    src_lang=obj["src_lang"],
                    tgt_lang=obj["tgt_lang"],
                    backend_id=obj["backend_id"],
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                if lineno == len(lines):
                    logger.warning(
                        "skipping truncated final cache line in %s: %s", path, exc
                    )
                    continue
                raise CacheError(f"{path}:{lineno}: corrupt cache line: {exc}") from exc
            self._index[record.key] = record.target_text

    def __len__(self) -> int:
        return len(self._index)

    def get(self, text: str, src: str, tgt: str, backend_id: str) -> str | None:
        return self._index.get((text, src, tgt, backend_id))

    def put(self, record: TranslationRecord) -> None:
        with self._lock:
            if self._index.get(record.key) == record.target_text:
                return
            self._index[record.key] = record.target_text
            if self._fh is None:
                return
            try:
                self._fh.write(json.dumps(record.__dict__, ensure_ascii=False) + "\n")
                self._fh.flush()
            except OSError as exc:
                raise CacheError(f"cache write failed: {exc}") from exc

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "TranslationCache":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


def cached_translate(
    cache: TranslationCache, backend: Any, text: str, src: str, tgt: str
) -> str:
    """Translate through the cache: hits never touch the backend, misses are
    persisted before the result is returned."""
    hit = cache.get(text, src, tgt, backend.backend_id)
    if hit is not None:
        return hit
    target = backend.translate(text, src, tgt)
    cache.put(
        TranslationRecord(
            source_text=text,
            target_text=target,
            src_lang=src,
            tgt_lang=tgt,
            backend_id=backend.backend_id,
        )
    )
    return target


def build_translated_context(translated_sentences: list[str]) -> TranslatedContext:
    """Join translated sentences with single spaces, tracking each
    sentence's code-point start offset."""
    offsets = []
    cursor = 0
    for sentence in translated_sentences:
        if not sentence or sentence.isspace():
            raise ValueError("translated sentences must be non-empty")
        offsets.append(cursor)
        cursor += len(sentence) + 1
    return TranslatedContext(
        full_text=" ".join(translated_sentences),
        sentence_offsets=tuple(offsets),
    )
