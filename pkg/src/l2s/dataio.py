"""Corpus readers, feature templates and the hashed feature space."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DataError

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

DEFAULT_BITS = 18
BOS = "<s>"
EOS = "</s>"
BIAS_NAMESPACE = "*"


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


def check_bits(bits: int) -> int:
    if not 8 <= bits <= 31:
        raise ConfigurationError(f"bits must be in [8, 31], got {bits}")
    return bits


@lru_cache(maxsize=1 << 20)
def hash_feature(namespace: str, name: str, bits: int = DEFAULT_BITS) -> int:
    """Index of feature ``name`` in ``namespace``.

    FNV-1a 64 over ``namespace + 0x1F + name`` (UTF-8), masked to ``bits``.
    """
    check_bits(bits)
    data = namespace.encode("utf-8") + b"\x1f" + name.encode("utf-8")
    return fnv1a_64(data) & ((1 << bits) - 1)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Sparse hashed features.

    Duplicate indices are merged by summing their values, so every index
    appears once. ``namespaces`` records which slice of the (sorted by
    insertion) entries came from which namespace; it is informational only.
    """

    indices: np.ndarray
    values: np.ndarray
    bits: int = DEFAULT_BITS
    namespaces: tuple = ()

    def __len__(self) -> int:
        return len(self.indices)

    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def with_features(self, extra: Iterable[tuple[int, float]], namespace: str = "") -> "FeatureVector":
        merged = dict(zip(self.indices.tolist(), self.values.tolist()))
        start = len(merged)
        for idx, val in extra:
            merged[idx] = merged.get(idx, 0.0) + val
        ns = self.namespaces
        if namespace:
            ns = ns + ((namespace, start, len(merged)),)
        return _from_dict(merged, self.bits, ns)

    @classmethod
    def empty(cls, bits: int = DEFAULT_BITS) -> "FeatureVector":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64), bits)


def _from_dict(merged: dict, bits: int, namespaces: tuple = ()) -> FeatureVector:
    idx = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
    val = np.fromiter(merged.values(), dtype=np.float64, count=len(merged))
    return FeatureVector(idx, val, bits, namespaces)


class FeatureBuilder:
    """Accumulates named features namespace by namespace."""

    def __init__(self, bits: int = DEFAULT_BITS):
        self.bits = check_bits(bits)
        self._acc: dict[int, float] = {}
        self._spans: list[tuple[str, int, int]] = []

    def add(self, namespace: str, name: str, value: float = 1.0) -> "FeatureBuilder":
        if not np.isfinite(value):
            raise ValueError(f"non-finite feature value for {namespace}:{name}")
        idx = hash_feature(namespace, name, self.bits)
        before = len(self._acc)
        self._acc[idx] = self._acc.get(idx, 0.0) + value
        if not self._spans or self._spans[-1][0] != namespace:
            self._spans.append((namespace, before, len(self._acc)))
        else:
            ns, lo, _ = self._spans[-1]
            self._spans[-1] = (ns, lo, len(self._acc))
        return self

    def build(self) -> FeatureVector:
        return _from_dict(self._acc, self.bits, tuple(self._spans))


# ---------------------------------------------------------------------------
# corpora


@dataclass(frozen=True)
class Token:
    columns: tuple[str, ...]

    @property
    def word(self) -> str:
        return self.columns[0]


@dataclass
class Sentence:
    tokens: list[Token]
    gold_labels: list[int]
    # per-sentence feature cache, keyed by whoever fills it
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.tokens) != len(self.gold_labels):
            raise DataError("token and label counts differ")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.word for t in self.tokens]


class LabelDict:
    """Label strings to contiguous ids, in first-appearance order."""

    def __init__(self, labels: Iterable[str] = ()):
        self._ids: dict[str, int] = {}
        self._names: list[str] = []
        self.frozen = False
        for lab in labels:
            self.add(lab)

    def add(self, label: str) -> int:
        lid = self._ids.get(label)
        if lid is None:
            if self.frozen:
                raise KeyError(label)
            lid = len(self._names)
            self._ids[label] = lid
            self._names.append(label)
        return lid

    def id(self, label: str) -> int:
        return self._ids[label]

    def name(self, lid: int) -> str:
        return self._names[lid]

    def __contains__(self, label: str) -> bool:
        return label in self._ids

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self):
        return iter(self._names)

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def freeze(self) -> "LabelDict":
        self.frozen = True
        return self


def read_columns(path: str | Path) -> list[list[Token]]:
    """Blank-line separated blocks of whitespace-separated columns."""
    blocks: list[list[Token]] = []
    cur: list[Token] = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            cols = line.split()
            if not cols:
                if cur:
                    blocks.append(cur)
                    cur = []
                continue
            if width is None:
                width = len(cols)
            elif len(cols) != width:
                raise DataError(f"{path}:{lineno}: expected {width} columns, found {len(cols)}")
            cur.append(Token(tuple(cols)))
    if cur:
        blocks.append(cur)
    return blocks


def read_conll(path: str | Path, label_column: int = -1, labels: LabelDict | None = None) -> list[Sentence]:
    """Read a column corpus; the label column is interned into ``labels``.

    With a frozen ``labels`` an unseen label raises ``DataError``.
    """
    if labels is None:
        labels = LabelDict()
    out = []
    for block in read_columns(path):
        try:
            gold = [labels.add(tok.columns[label_column]) for tok in block]
        except KeyError as exc:
            raise DataError(f"{path}: label {exc.args[0]!r} not in the label table") from None
        except IndexError:
            raise DataError(f"{path}: no column {label_column}") from None
        out.append(Sentence(block, gold))
    return out


def write_conll(
    sentences: Sequence[Sentence],
    path: str | Path,
    extra_columns: Sequence[Sequence[str]] | None = None,
) -> None:
    """Write sentences back in column format, optionally appending one column."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, sent in enumerate(sentences):
            for j, tok in enumerate(sent.tokens):
                cols = list(tok.columns)
                if extra_columns is not None:
                    cols.append(extra_columns[i][j])
                fh.write(" ".join(cols) + "\n")
            fh.write("\n")


def read_entity_relation(path: str | Path) -> list[dict]:
    """One JSON record per line with ``entities`` and ``relations`` lists."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if "entities" not in rec or "relations" not in rec:
                raise DataError(f"{path}:{lineno}: record needs 'entities' and 'relations'")
            for ent in rec["entities"]:
                if "span" not in ent or "gold_type" not in ent:
                    raise DataError(f"{path}:{lineno}: entity needs 'span' and 'gold_type'")
            for rel in rec["relations"]:
                if not {"arg1", "arg2", "gold_type"} <= rel.keys():
                    raise DataError(f"{path}:{lineno}: relation needs 'arg1', 'arg2', 'gold_type'")
            records.append(rec)
    return records


# ---------------------------------------------------------------------------
# templates

_NEIGHBOR_RE = re.compile(r"^([+-]?\d+):(\w+)$")
_AFFIX_RE = re.compile(r"^([+-])(\d)(\w+)$")


@dataclass(frozen=True)
class TemplateSpec:
    """Neighbor-word and affix feature templates.

    ``neighbor_features`` holds (offset, namespace); offset 0 is the current
    token. ``affix_specs`` holds (length, "prefix"|"suffix", namespace) and
    applies to the current token. ``columns`` maps namespaces to columns.
    """

    neighbor_features: tuple[tuple[int, str], ...] = ((0, "w"),)
    affix_specs: tuple[tuple[int, str, str], ...] = ()
    columns: tuple[tuple[str, int], ...] = (("w", 0), ("p", 1))

    def __post_init__(self):
        seen = set()
        for off, ns in self.neighbor_features:
            if (off, ns) in seen:
                raise ConfigurationError(f"duplicate neighbor template {off}:{ns}")
            seen.add((off, ns))
        for length, side, _ in self.affix_specs:
            if not 1 <= length <= 7:
                raise ConfigurationError(f"affix length must be in 1..7, got {length}")
            if side not in ("prefix", "suffix"):
                raise ConfigurationError(f"affix side must be prefix or suffix, got {side!r}")

    def column(self, namespace: str) -> int:
        for ns, col in self.columns:
            if ns == namespace:
                return col
        raise ConfigurationError(f"namespace {namespace!r} has no column")

    @classmethod
    def parse(cls, neighbors: str = "0:w", affixes: str = "", columns: str = "w,p") -> "TemplateSpec":
        """Build from flag strings such as ``"-1:w,1:w"`` and ``"-2w,+2w"``.

        In affix strings ``+`` is a prefix and ``-`` a suffix.
        """
        nb = []
        for item in filter(None, (s.strip() for s in neighbors.split(","))):
            m = _NEIGHBOR_RE.match(item)
            if not m:
                raise ConfigurationError(f"bad neighbor template {item!r}")
            nb.append((int(m.group(1)), m.group(2)))
        af = []
        for item in filter(None, (s.strip() for s in affixes.split(","))):
            m = _AFFIX_RE.match(item)
            if not m:
                raise ConfigurationError(f"bad affix template {item!r}")
            side = "prefix" if m.group(1) == "+" else "suffix"
            af.append((int(m.group(2)), side, m.group(3)))
        cols = tuple((ns, i) for i, ns in enumerate(filter(None, columns.split(","))))
        return cls(tuple(nb), tuple(af), cols)


def affix_namespace(namespace: str, length: int, side: str) -> str:
    return f"{namespace}{'+' if side == 'prefix' else '-'}{length}"


def apply_templates(sent: Sentence, pos: int, spec: TemplateSpec, bits: int = DEFAULT_BITS) -> FeatureVector:
    """Template features for token ``pos``; every value is 1.0."""
    n = len(sent)
    if not 0 <= pos < n:
        raise IndexError(f"position {pos} outside sentence of length {n}")
    fb = FeatureBuilder(bits)
    for off, ns in spec.neighbor_features:
        j = pos + off
        if j < 0:
            val = BOS
        elif j >= n:
            val = EOS
        else:
            val = sent.tokens[j].columns[spec.column(ns)]
        fb.add(ns, f"{off}={val}")
    for length, side, ns in spec.affix_specs:
        word = sent.tokens[pos].columns[spec.column(ns)]
        piece = word[:length] if side == "prefix" else word[-length:]
        fb.add(affix_namespace(ns, length, side), piece)
    fb.add(BIAS_NAMESPACE, "bias")
    return fb.build()


def sentence_features(sent: Sentence, spec: TemplateSpec, bits: int = DEFAULT_BITS) -> list[FeatureVector]:
    """Template features for every position, cached on the sentence."""
    key = ("templates", spec, bits)
    feats = sent.cache.get(key)
    if feats is None:
        feats = [apply_templates(sent, i, spec, bits) for i in range(len(sent))]
        sent.cache[key] = feats
    return feats
