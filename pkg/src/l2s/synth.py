"""Synthetic Markov-chain tagging corpora."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataio import LabelDict, Sentence, Token
from .errors import ConfigurationError


def markov_corpus(
    num_sentences: int,
    length: int,
    num_labels: int = 5,
    noise: float = 0.3,
    stickiness: float = 0.8,
    vocab_per_label: int = 3,
    seed: int = 0,
) -> list[tuple[list[str], list[str]]]:
    """Sentences from an order-1 label chain.

    With probability ``stickiness`` label ``y`` is followed by ``y + 1 mod k``,
    otherwise by a uniform label. Each label owns ``vocab_per_label`` words;
    with probability ``noise`` the emitted word instead comes from a shared
    pool of ``vocab_per_label`` noise words that say nothing about the label.
    """
    if num_labels < 2:
        raise ConfigurationError("need at least two labels")
    if not 0 <= noise <= 1 or not 0 <= stickiness <= 1:
        raise ConfigurationError("noise and stickiness must be in [0, 1]")
    if length < 1 or num_sentences < 0 or vocab_per_label < 1:
        raise ConfigurationError("length and vocab_per_label must be positive")
    rng = np.random.default_rng(seed)
    k, v = num_labels, vocab_per_label
    out = []
    for _ in range(num_sentences):
        y = int(rng.integers(k))
        words, labels = [], []
        for i in range(length):
            if i:
                y = (y + 1) % k if rng.random() < stickiness else int(rng.integers(k))
            if rng.random() < noise:
                words.append(f"n{int(rng.integers(v))}")
            else:
                words.append(f"w{y * v + int(rng.integers(v))}")
            labels.append(f"L{y}")
        out.append((words, labels))
    return out


def to_sentences(corpus, labels: LabelDict | None = None) -> tuple[list[Sentence], LabelDict]:
    labels = labels if labels is not None else LabelDict()
    sents = [
        Sentence([Token((w, y)) for w, y in zip(words, tags)], [labels.add(y) for y in tags])
        for words, tags in corpus
    ]
    return sents, labels


def write_corpus(corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for words, tags in corpus:
            for w, y in zip(words, tags):
                fh.write(f"{w} {y}\n")
            fh.write("\n")
