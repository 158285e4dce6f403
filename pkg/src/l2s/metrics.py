"""Hamming accuracy, BIO span F1, entity/relation micro-F1 and UAS."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

NONE_RELATION = "none"


@dataclass(frozen=True)
class Span:
    start: int
    end: int  # inclusive
    type: str

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start after end")


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PRF":
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        return cls(p, r, harmonic(p, r), tp, fp, fn)


def harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def hamming_accuracy(pred: Sequence, gold: Sequence) -> float:
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} predictions, {len(gold)} gold")
    if not gold:
        return 0.0
    return sum(p == g for p, g in zip(pred, gold)) / len(gold)


def fix_bio(labels: Sequence[str]) -> list[str]:
    """Rewrite every I-x not preceded by B-x or I-x as B-x."""
    out = []
    prev = "O"
    for lab in labels:
        if lab.startswith("I-") and prev[2:] != lab[2:]:
            lab = "B-" + lab[2:]
        out.append(lab)
        prev = lab
    return out


def extract_spans_bio(labels: Sequence[str]) -> list[Span]:
    spans = []
    start = None
    typ = None
    for i, lab in enumerate(fix_bio(labels) + ["O"]):
        if lab.startswith("I-") and typ == lab[2:]:
            continue
        if typ is not None:
            spans.append(Span(start, i - 1, typ))
            typ = None
        if lab.startswith("B-"):
            start, typ = i, lab[2:]
    return spans


def spans_to_bio(spans: Iterable[Span], length: int) -> list[str]:
    out = ["O"] * length
    for sp in spans:
        out[sp.start] = "B-" + sp.type
        for i in range(sp.start + 1, sp.end + 1):
            out[i] = "I-" + sp.type
    return out


def span_f1(pred_sents: Sequence[Sequence[str]], gold_sents: Sequence[Sequence[str]], averaging: str = "macro") -> PRF:
    """Exact-match span F1 over a corpus of BIO sequences.

    ``macro`` averages per-type precision, recall and F1 over types that
    occur in predictions or gold; ``micro`` pools the counts.
    """
    if averaging not in ("macro", "micro"):
        raise ValueError(f"averaging must be macro or micro, got {averaging!r}")
    if len(pred_sents) != len(gold_sents):
        raise ValueError("prediction and gold corpora differ in length")
    tp, fp, fn = Counter(), Counter(), Counter()
    for pred, gold in zip(pred_sents, gold_sents):
        ps = set(extract_spans_bio(pred))
        gs = set(extract_spans_bio(gold))
        for sp in ps & gs:
            tp[sp.type] += 1
        for sp in ps - gs:
            fp[sp.type] += 1
        for sp in gs - ps:
            fn[sp.type] += 1
    T, F, N = sum(tp.values()), sum(fp.values()), sum(fn.values())
    if averaging == "micro":
        return PRF.from_counts(T, F, N)
    types = sorted(set(tp) | set(fp) | set(fn))
    if not types:
        return PRF(0.0, 0.0, 0.0, 0, 0, 0)
    per = [PRF.from_counts(tp[t], fp[t], fn[t]) for t in types]
    n = len(per)
    return PRF(
        sum(x.precision for x in per) / n,
        sum(x.recall for x in per) / n,
        sum(x.f1 for x in per) / n,
        T, F, N,
    )


def micro_f1_relations(pred: Sequence[Iterable[tuple]], gold: Sequence[Iterable[tuple]]) -> PRF:
    """Pooled F1 over (arg1, arg2, type) triples, ignoring the none relation."""
    tp = fp = fn = 0
    for p, g in zip(pred, gold, strict=True):
        ps = {r for r in p if r[2] != NONE_RELATION}
        gs = {r for r in g if r[2] != NONE_RELATION}
        tp += len(ps & gs)
        fp += len(ps - gs)
        fn += len(gs - ps)
    return PRF.from_counts(tp, fp, fn)


def micro_f1_entities(pred: Sequence[Sequence[str]], gold: Sequence[Sequence[str]]) -> PRF:
    """Pooled F1 over (entity index, type) pairs."""
    tp = fp = fn = 0
    for p, g in zip(pred, gold, strict=True):
        ps = set(enumerate(p))
        gs = set(enumerate(g))
        tp += len(ps & gs)
        fp += len(ps - gs)
        fn += len(gs - ps)
    return PRF.from_counts(tp, fp, fn)


def uas(pred_heads: Sequence[int], gold_heads: Sequence[int]) -> float:
    if len(pred_heads) != len(gold_heads):
        raise ValueError("head sequences differ in length")
    if not gold_heads:
        return 0.0
    return sum(p == g for p, g in zip(pred_heads, gold_heads)) / len(gold_heads)
