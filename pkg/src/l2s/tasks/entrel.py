"""Joint entity typing and relation classification under type constraints.

One action space covers both decisions: entity types take ids
``0..E-1`` and relation types ``E..E+R-1``; the allowed sets keep the two
apart. Relations are predicted for each entity pair ``n < m``; a predicted
relation is oriented (n, m) when the constraint table licenses it for the
predicted types in that order, otherwise (m, n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..dataio import DEFAULT_BITS, FeatureBuilder
from ..errors import ConfigurationError, DataError

NONE = "none"


@dataclass
class RelationConstraintTable:
    """(arg1 type, arg2 type) -> relation types licensed for that order."""

    entity_types: list[str]
    allowed: dict[tuple[str, str], set[str]] = field(default_factory=dict)

    @property
    def relation_types(self) -> list[str]:
        rels = {NONE}
        for s in self.allowed.values():
            rels |= s
        return [NONE] + sorted(rels - {NONE})

    def add(self, relation: str, arg1: str, arg2: str) -> None:
        for t in (arg1, arg2):
            if t not in self.entity_types:
                self.entity_types.append(t)
        self.allowed.setdefault((arg1, arg2), set()).add(relation)

    @classmethod
    def parse(cls, text: str) -> "RelationConstraintTable":
        """Lines of ``relation arg1_type arg2_type``.

        An optional ``entity_types A B ...`` line fixes the type inventory
        (types mentioned by relation lines are added to it either way).
        ``#`` starts a comment.
        """
        table = cls([])
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split("#", 1)[0].split()
            if not parts:
                continue
            if parts[0] == "entity_types":
                for t in parts[1:]:
                    if t not in table.entity_types:
                        table.entity_types.append(t)
                continue
            if len(parts) != 3:
                raise ConfigurationError(f"constraint line {lineno}: expected 'relation arg1 arg2'")
            table.add(*parts)
        return table

    @classmethod
    def load(cls, path: str | Path) -> "RelationConstraintTable":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> "RelationConstraintTable":
        text = resources.files("l2s").joinpath("data/relations.txt").read_text(encoding="utf-8")
        return cls.parse(text)


def find_valid_relations(t1: str, t2: str, table: RelationConstraintTable) -> set[str]:
    for t in (t1, t2):
        if t not in table.entity_types:
            raise ConfigurationError(f"entity type {t!r} is not in the constraint table")
    return table.allowed.get((t1, t2), set()) | {NONE}


@dataclass
class EntityRelationOutput:
    entity_types: list[str]
    relations: list[tuple[int, int, str]]  # (arg1, arg2, type), none excluded


def entity_text(rec: dict, ent: dict) -> list[str]:
    span = ent["span"]
    if isinstance(span, str):
        return span.split()
    toks = rec.get("tokens")
    if toks is None:
        raise DataError("numeric entity spans need a 'tokens' field")
    start, end = span
    return toks[start:end + 1]


def gold_relation_map(rec: dict) -> dict[tuple[int, int], str]:
    out = {}
    for rel in rec["relations"]:
        a, b = int(rel["arg1"]), int(rel["arg2"])
        out[(min(a, b), max(a, b))] = rel["gold_type"]
    return out


class EntityRelationTask:
    history_independent = True

    def __init__(self, table: RelationConstraintTable | None = None, bits: int = DEFAULT_BITS):
        self.table = table or RelationConstraintTable.default()
        self.bits = bits
        self.entity_labels = list(self.table.entity_types)
        self.relation_labels = self.table.relation_types
        self.labels = self.entity_labels + self.relation_labels
        self.num_actions = len(self.labels)
        self._ent_ids = {t: i for i, t in enumerate(self.entity_labels)}
        E = len(self.entity_labels)
        self._rel_ids = {r: E + i for i, r in enumerate(self.relation_labels)}
        self._entity_allowed = tuple(range(E))
        self._pair_cache: dict = {}

    def entity_id(self, name: str) -> int:
        try:
            return self._ent_ids[name]
        except KeyError:
            raise ConfigurationError(f"entity type {name!r} is not in the constraint table") from None

    def relation_id(self, name: str) -> int:
        try:
            return self._rel_ids[name]
        except KeyError:
            raise ConfigurationError(f"relation type {name!r} is not in the constraint table") from None

    def pair_allowed(self, t1: int, t2: int) -> tuple[int, ...]:
        key = (t1, t2)
        got = self._pair_cache.get(key)
        if got is None:
            n1, n2 = self.entity_labels[t1], self.entity_labels[t2]
            rels = find_valid_relations(n1, n2, self.table) | find_valid_relations(n2, n1, self.table)
            got = tuple(sorted(self._rel_ids[r] for r in rels))
            self._pair_cache[key] = got
        return got

    def orient(self, n: int, m: int, t1: int, t2: int, rel: str) -> tuple[int, int, str]:
        n1, n2 = self.entity_labels[t1], self.entity_labels[t2]
        if rel in find_valid_relations(n1, n2, self.table):
            return (n, m, rel)
        return (m, n, rel)

    # features ---------------------------------------------------------------

    def entity_features(self, rec: dict, n: int):
        key = ("ent", n, self.bits)
        cache = rec.setdefault("_cache", {})
        fv = cache.get(key)
        if fv is None:
            words = entity_text(rec, rec["entities"][n])
            fb = FeatureBuilder(self.bits)
            for w in words:
                fb.add("e", w.lower())
            fb.add("e", "first=" + words[0].lower()).add("e", "last=" + words[-1].lower())
            fb.add("e", "suf3=" + words[-1][-3:].lower())
            fb.add("e", "shape=" + "".join("X" if w[:1].isupper() else "x" for w in words))
            fb.add("e", f"len={min(len(words), 4)}")
            fb.add("eb", "bias")
            fv = cache[key] = fb.build()
        return fv

    def relation_features(self, rec: dict, n: int, m: int, t1: int, t2: int):
        key = ("rel", n, m, t1, t2, self.bits)
        cache = rec.setdefault("_cache", {})
        fv = cache.get(key)
        if fv is None:
            a, b = self.entity_labels[t1], self.entity_labels[t2]
            fb = FeatureBuilder(self.bits)
            fb.add("rt", f"t1={a}").add("rt", f"t2={b}").add("rt", f"t1t2={a}|{b}")
            ents = rec["entities"]
            toks = rec.get("tokens")
            if toks is not None and not isinstance(ents[n]["span"], str):
                lo, hi = ents[n]["span"][1] + 1, ents[m]["span"][0]
                between = toks[lo:hi] if lo <= hi else toks[hi:lo]
                for w in between:
                    fb.add("rw", w.lower())
                fb.add("rw", f"dist={min(len(between), 6)}")
            fb.add("ra", "h1=" + entity_text(rec, ents[n])[-1].lower())
            fb.add("ra", "h2=" + entity_text(rec, ents[m])[-1].lower())
            fb.add("rb", "bias")
            fv = cache[key] = fb.build()
        return fv

    # program ----------------------------------------------------------------

    def run(self, session, rec: dict) -> EntityRelationOutput:
        return run_entity_relation(session, rec, self)


def run_entity_relation(session, rec: dict, task: EntityRelationTask) -> EntityRelationOutput:
    ents = rec["entities"]
    K = len(ents)
    gold_rel = gold_relation_map(rec)
    types: list[int] = []
    for n in range(K):
        gold = task.entity_id(ents[n]["gold_type"])
        a = session.predict(task.entity_features(rec, n), gold, tag=n + 1, allowed=task._entity_allowed)
        types.append(a)
        session.declare_loss(1.0 if a != gold else 0.0)
    relations = []
    for n in range(K - 1):
        for m in range(n + 1, K):
            allowed = task.pair_allowed(types[n], types[m])
            gold = task.relation_id(gold_rel.get((n, m), NONE))
            # reference: gold if licensed by the predicted types, else none
            ref = gold if gold in allowed else task.relation_id(NONE)
            feats = lambda n=n, m=m: task.relation_features(rec, n, m, types[n], types[m])
            # 1-based tags: entities are 1..K, pair (n, m) is K*(n+1)+m
            tag = K * (n + 2) + (m + 1)
            a = session.predict(feats, ref, tag=tag, condition=(n + 1, m + 1), allowed=allowed)
            session.declare_loss(1.0 if a != gold else 0.0)
            rel = task.labels[a]
            if rel != NONE:
                relations.append(task.orient(n, m, types[n], types[m], rel))
    return EntityRelationOutput([task.entity_labels[t] for t in types], relations)
