"""Scoring of a predictions file against a gold dataset: exact match, token
F1 with has-answer/no-answer breakdown, and corpus BLEU-1/BLEU-2.

No English article stripping in the normalizer (meaningless outside
English) and no BLEU smoothing: a zero n-gram precision yields corpus BLEU
0 by definition here.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable

from .dataset import Dataset


@dataclass(frozen=True)
class EvalReport:
    em: float
    f1: float
    em_has_ans: float
    f1_has_ans: float
    em_no_ans: float
    f1_no_ans: float
    bleu1: float
    bleu2: float
    total: int
    has_ans_count: int
    no_ans_count: int
    missing_ids: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {
            "em": self.em,
            "f1": self.f1,
            "em_has_ans": self.em_has_ans,
            "f1_has_ans": self.f1_has_ans,
            "em_no_ans": self.em_no_ans,
            "f1_no_ans": self.f1_no_ans,
            "bleu1": self.bleu1,
            "bleu2": self.bleu2,
            "total": self.total,
            "has_ans_count": self.has_ans_count,
            "no_ans_count": self.no_ans_count,
            "missing_ids": list(self.missing_ids),
        }


def normalize_answer(text: str) -> str:
    """Canonical compose, lowercase, drop punctuation, collapse whitespace."""
    text = unicodedata.normalize("NFC", text).lower()
    text = "".join(
        ch for ch in text if not unicodedata.category(ch).startswith("P")
    )
    return " ".join(text.split())


def exact_match(pred: str, golds: Iterable[str]) -> int:
    """1 iff the normalized prediction equals some normalized gold.

    An empty gold list is the no-answer convention: correct iff the
    prediction normalizes to empty.
    """
    norm_pred = normalize_answer(pred)
    golds = list(golds)
    if not golds:
        return 1 if norm_pred == "" else 0
    return 1 if any(norm_pred == normalize_answer(g) for g in golds) else 0


def _token_f1(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens or not gold_tokens:
        return 1.0 if pred_tokens == gold_tokens else 0.0
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def f1(pred: str, golds: Iterable[str]) -> float:
    """Token-overlap F1 (multiset), maximized over the gold answers."""
    golds = list(golds) or [""]
    pred_tokens = normalize_answer(pred).split()
    return max(_token_f1(pred_tokens, normalize_answer(g).split()) for g in golds)


def bleu(pred_list: list[str], gold_list: list[str], max_n: int = 1) -> float:
    """Corpus-level BLEU over normalized whitespace tokens.

    Geometric mean of modified n-gram precisions up to max_n, times the
    brevity penalty exp(min(0, 1 - r/c)). Pairs where both sides normalize
    to empty are skipped; no smoothing, so a zero precision zeroes the
    score.
    """
    if len(pred_list) != len(gold_list):
        raise ValueError("prediction and reference lists differ in length")
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    matched = [0] * max_n
    candidate_total = [0] * max_n
    cand_len = 0
    ref_len = 0
    for pred, gold in zip(pred_list, gold_list):
        pred_tokens = normalize_answer(pred).split()
        gold_tokens = normalize_answer(gold).split()
        if not pred_tokens and not gold_tokens:
            continue
        cand_len += len(pred_tokens)
        ref_len += len(gold_tokens)
        for n in range(1, max_n + 1):
            pred_grams = Counter(
                tuple(pred_tokens[i : i + n]) for i in range(len(pred_tokens) - n + 1)
            )
            gold_grams = Counter(
                tuple(gold_tokens[i : i + n]) for i in range(len(gold_tokens) - n + 1)
            )
            matched[n - 1] += sum((pred_grams & gold_grams).values())
            candidate_total[n - 1] += sum(pred_grams.values())
    if cand_len == 0:
        return 0.0
    precisions = [
        (matched[k] / candidate_total[k]) if candidate_total[k] else 0.0
        for k in range(max_n)
    ]
    if any(p == 0.0 for p in precisions):
        return 0.0
    geo_mean = math.prod(precisions) ** (1.0 / max_n)
    brevity = math.exp(min(0.0, 1.0 - ref_len / cand_len))
    return geo_mean * brevity


def evaluate(predictions: dict[str, str], gold: Dataset) -> EvalReport:
    """Score a {question id -> answer string} map against a gold dataset.

    Missing ids are reported and scored 0; the has-answer/no-answer split
    follows is_impossible, and the group means always recompose to the
    overall means.
    """
    em_sum = f1_sum = 0.0
    em_has = f1_has = 0.0
    em_no = f1_no = 0.0
    has_count = no_count = 0
    missing = []
    preds = []
    refs = []
    for _, _, qa in gold.iter_qas():
        golds = [a.text for a in qa.answers]
        if qa.id in predictions:
            pred = predictions[qa.id]
            item_em = float(exact_match(pred, golds))
            item_f1 = f1(pred, golds)
        else:
            missing.append(qa.id)
            pred = ""
            item_em = 0.0
            item_f1 = 0.0
        preds.append(pred)
        refs.append(golds[0] if golds else "")
        em_sum += item_em
        f1_sum += item_f1
        if qa.is_impossible:
            no_count += 1
            em_no += item_em
            f1_no += item_f1
        else:
            has_count += 1
            em_has += item_em
            f1_has += item_f1
    total = has_count + no_count

    def pct(s: float, n: int) -> float:
        return 100.0 * s / n if n else 0.0

    return EvalReport(
        em=pct(em_sum, total),
        f1=pct(f1_sum, total),
        em_has_ans=pct(em_has, has_count),
        f1_has_ans=pct(f1_has, has_count),
        em_no_ans=pct(em_no, no_count),
        f1_no_ans=pct(f1_no, no_count),
        bleu1=100.0 * bleu(preds, refs, max_n=1),
        bleu2=100.0 * bleu(preds, refs, max_n=2),
        total=total,
        has_ans_count=has_count,
        no_ans_count=no_count,
        missing_ids=tuple(missing),
    )
