"""Sequence labeling, optionally with BIO chunking constraints."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

from ..dataio import (
    DEFAULT_BITS,
    FeatureVector,
    LabelDict,
    Sentence,
    TemplateSpec,
    hash_feature,
    sentence_features,
)
from ..errors import ConfigurationError

HISTORY_NAMESPACE = "h"


class BIOConstraint:
    """Allowed-label function for BIO tag inventories.

    ``I-x`` may only follow ``B-x`` or ``I-x``; at the sentence start
    (``prev is None``) and after ``O`` no ``I-*`` is allowed.
    """

    def __init__(self, labels: Sequence[str] | LabelDict):
        names = list(labels)
        for lab in names:
            if lab != "O" and not (lab.startswith("B-") or lab.startswith("I-")):
                raise ConfigurationError(f"label {lab!r} is not a BIO label")
        self.names = names
        self._types = [lab[2:] if lab != "O" else None for lab in names]
        self._inside = [lab.startswith("I-") for lab in names]
        self._begin_of = {lab[2:]: i for i, lab in enumerate(names) if lab.startswith("B-")}
        self._cache: dict = {}

    def __call__(self, prev: Optional[int]) -> tuple[int, ...]:
        got = self._cache.get(prev)
        if got is None:
            ptype = None if prev is None else self._types[prev]
            got = tuple(
                i for i in range(len(self.names))
                if not self._inside[i] or (ptype is not None and self._types[i] == ptype)
            )
            self._cache[prev] = got
        return got

    def repair(self, gold: int, prev: Optional[int]) -> int:
        """Best allowed stand-in for ``gold`` after ``prev``: its ``B-`` form."""
        allowed = self(prev)
        if gold in allowed:
            return gold
        b = self._begin_of.get(self._types[gold])
        if b is not None and b in allowed:
            return b
        return allowed[0]


def bio_valid_labels(prev: Optional[int], labels: Sequence[str] | LabelDict) -> tuple[int, ...]:
    return BIOConstraint(labels)(prev)


@dataclass
class SequenceTaskConfig:
    markov_order: int = 1
    constraint: Optional[Callable[[Optional[int]], tuple]] = None
    templates: TemplateSpec = TemplateSpec()
    bits: int = DEFAULT_BITS
    label_names: Optional[Sequence[str]] = None

    def __post_init__(self):
        if self.markov_order < 0:
            raise ConfigurationError("markov_order must be >= 0")


def _history_feature(j: int, label: int, names, bits: int) -> int:
    name = names[label] if names is not None else str(label)
    return hash_feature(HISTORY_NAMESPACE, f"prev_{j}={name}", bits)


def position_features(sent: Sentence, i: int, history: tuple, cfg: SequenceTaskConfig) -> FeatureVector:
    """Template features of token ``i`` plus one feature per previous prediction."""
    base = sentence_features(sent, cfg.templates, cfg.bits)[i]
    if not history:
        return base
    key = ("hist", i, history, cfg.bits)
    fv = sent.cache.get(key)
    if fv is None:
        # history is oldest first; prev_1 is the most recent prediction
        extra = [
            (_history_feature(j, lab, cfg.label_names, cfg.bits), 1.0)
            for j, lab in enumerate(reversed(history), 1)
        ]
        fv = base.with_features(extra, HISTORY_NAMESPACE)
        sent.cache[key] = fv
    return fv


@lru_cache(maxsize=None)
def _condition(lo: int, i: int) -> tuple[int, ...]:
    return tuple(range(lo + 1, i + 1))


def run_sequence(session, sent: Sentence, cfg: SequenceTaskConfig) -> list[int]:
    out: list[int] = []
    m = cfg.markov_order
    base = sentence_features(sent, cfg.templates, cfg.bits)
    constraint = cfg.constraint
    repair = getattr(constraint, "repair", None)
    gold_labels = sent.gold_labels
    for i in range(len(sent)):
        gold = gold_labels[i]
        allowed = None
        ref = gold
        if constraint is not None:
            prev = out[i - 1] if i else None
            allowed = constraint(prev)
            if gold not in allowed:
                ref = repair(gold, prev) if repair else allowed[0]
        lo = i - m if i > m else 0
        if lo < i:
            hist = tuple(out[lo:i])
            feats = lambda i=i, hist=hist: position_features(sent, i, hist, cfg)
        else:
            feats = base[i]
        # the allowed set depends on the previous label even when m == 0
        clo = i - 1 if constraint is not None and i and lo == i else lo
        a = session.predict(feats, ref, tag=i + 1, condition=_condition(clo, i), allowed=allowed)
        out.append(a)
        session.declare_loss(1.0 if a != gold else 0.0)
    return out


class SequenceTask:
    """Tags each token in turn; Hamming loss, declared per position."""

    history_independent = True

    def __init__(self, num_actions: int, cfg: SequenceTaskConfig | None = None):
        self.num_actions = num_actions
        self.cfg = cfg or SequenceTaskConfig()

    def run(self, session, sent: Sentence) -> list[int]:
        return run_sequence(session, sent, self.cfg)


class BIOTask(SequenceTask):
    """Sequence labeling where decoding respects the BIO constraint."""

    def __init__(self, labels: Sequence[str] | LabelDict, cfg: SequenceTaskConfig | None = None):
        names = list(labels)
        cfg = cfg or SequenceTaskConfig()
        cfg.constraint = BIOConstraint(names)
        if cfg.label_names is None:
            cfg.label_names = names
        super().__init__(len(names), cfg)
