"""Unlabeled arc-hybrid dependency parsing.

Tokens are numbered 1..n and 0 is the synthetic root. ``heads[i]`` is the
head of token ``i`` (``heads[0]`` is unused) or ``None`` while unassigned.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

from ..dataio import DEFAULT_BITS, FeatureBuilder, read_columns
from ..errors import ContractError, DataError

log = logging.getLogger(__name__)

SHIFT = 0
RIGHT_ARC = 1
LEFT_ARC = 2
ACTION_NAMES = ("SHIFT", "RIGHT_ARC", "LEFT_ARC")
ROOT = 0


@dataclass(frozen=True)
class ParserState:
    stack: tuple[int, ...]
    buffer: tuple[int, ...]
    heads: tuple  # length n + 1

    @classmethod
    def initial(cls, n: int) -> "ParserState":
        return cls((ROOT,), tuple(range(1, n + 1)), (None,) * (n + 1))

    @property
    def terminal(self) -> bool:
        return not self.buffer and len(self.stack) == 1


def dep_valid_actions(state: ParserState) -> tuple[int, ...]:
    acts = []
    if state.buffer:
        acts.append(SHIFT)
    if len(state.stack) >= 2:
        acts.append(RIGHT_ARC)
    if state.buffer and state.stack[-1] != ROOT:
        acts.append(LEFT_ARC)
    return tuple(acts)


def dep_trans(state: ParserState, action: int) -> ParserState:
    if action not in dep_valid_actions(state):
        raise ContractError(f"action {action} is not valid in {state}")
    stack, buf, heads = state.stack, state.buffer, state.heads
    if action == SHIFT:
        return ParserState(stack + (buf[0],), buf[1:], heads)
    dep = stack[-1]
    head = buf[0] if action == LEFT_ARC else stack[-2]
    heads = heads[:dep] + (head,) + heads[dep + 1:]
    return ParserState(stack[:-1], buf, heads)


def attachment_loss(heads: Sequence, gold: Sequence[int]) -> int:
    return sum(1 for i in range(1, len(gold)) if heads[i] != gold[i])


def is_projective(gold: Sequence[int]) -> bool:
    n = len(gold) - 1
    arcs = [(min(i, gold[i]), max(i, gold[i])) for i in range(1, n + 1)]
    for a, b in arcs:
        for c, d in arcs:
            if a < c < b < d:
                return False
    return True


def _future_solver(gold: tuple[int, ...]):
    """Minimal number of wrong heads among tokens still on stack/buffer.

    The already-assigned heads are fixed, so the optimum over completions
    depends only on (stack, buffer).
    """

    @lru_cache(maxsize=None)
    def best(stack: tuple, buffer: tuple) -> int:
        if not buffer and len(stack) == 1:
            return 0
        out = None
        for a, cost in _successors(stack, buffer, gold):
            v = cost + best(*a)
            if out is None or v < out:
                out = v
        return out

    return best


def _successors(stack, buffer, gold):
    if buffer:
        yield (stack + (buffer[0],), buffer[1:]), 0
    if len(stack) >= 2:
        dep = stack[-1]
        yield (stack[:-1], buffer), int(gold[dep] != stack[-2])
    if buffer and stack[-1] != ROOT:
        dep = stack[-1]
        yield (stack[:-1], buffer), int(gold[dep] != buffer[0])


_SOLVERS: dict = {}


def _solver(gold: Sequence[int]):
    key = tuple(gold)
    s = _SOLVERS.get(key)
    if s is None:
        if len(_SOLVERS) > 4096:
            _SOLVERS.clear()
        s = _SOLVERS[key] = _future_solver(key)
    return s


def _wrong_assigned(heads: Sequence, gold: Sequence[int]) -> int:
    return sum(1 for i in range(1, len(gold)) if heads[i] is not None and heads[i] != gold[i])


def exhaustive_action_costs(state: ParserState, gold: Sequence[int]) -> dict[int, int]:
    """Minimal final loss reachable after each valid action."""
    best = _solver(gold)
    out = {}
    for act in dep_valid_actions(state):
        nxt = dep_trans(state, act)
        out[act] = _wrong_assigned(nxt.heads, gold) + best(nxt.stack, nxt.buffer)
    return out


def min_completion_loss(state: ParserState, gold: Sequence[int]) -> int:
    return _wrong_assigned(state.heads, gold) + _solver(gold)(state.stack, state.buffer)


def closed_form_action_costs(state: ParserState, gold: Sequence[int]) -> dict[int, int]:
    """Arc-hybrid dynamic-oracle costs: gold arcs each action makes unreachable.

    Equals ``exhaustive_action_costs(...)[a] - min_completion_loss(state)``.
    """
    stack, buf = state.stack, state.buffer
    out = {}
    if buf:
        b = buf[0]
        c = sum(1 for h in stack[:-1] if gold[b] == h)
        c += sum(1 for d in stack if d != ROOT and gold[d] == b)
        out[SHIFT] = c
    if len(stack) >= 2:
        s0 = stack[-1]
        c = sum(1 for h in buf if gold[s0] == h)
        c += sum(1 for d in buf if gold[d] == s0)
        out[RIGHT_ARC] = c
    if buf and stack[-1] != ROOT:
        s0 = stack[-1]
        others = ((stack[-2],) if len(stack) >= 2 else ()) + buf[1:]
        c = sum(1 for h in others if gold[s0] == h)
        c += sum(1 for d in buf if gold[d] == s0)
        out[LEFT_ARC] = c
    return out


_TIE_ORDER = (SHIFT, RIGHT_ARC, LEFT_ARC)


def dep_gold_action(state: ParserState, gold: Sequence[int], oracle: str = "exhaustive") -> int:
    """Action whose best completion has the lowest loss (ties: Shift, RightArc, LeftArc)."""
    if state.terminal:
        raise ContractError("no gold action in a terminal state")
    costs = exhaustive_action_costs(state, gold) if oracle == "exhaustive" else closed_form_action_costs(state, gold)
    lo = min(costs.values())
    for act in _TIE_ORDER:
        if costs.get(act) == lo:
            return act
    raise AssertionError("unreachable")


@dataclass
class DepSentence:
    words: list[str]
    tags: list[str]
    gold_heads: list[int]  # index 0 unused (root)

    def __len__(self) -> int:
        return len(self.words)


def read_dependency_corpus(path: str | Path, skip_nonprojective: bool = True) -> list[DepSentence]:
    """Columns ``word [pos ...] head`` with 1-based heads and 0 for the root."""
    out = []
    for block in read_columns(path):
        words = [t.columns[0] for t in block]
        tags = [t.columns[1] if len(t.columns) > 2 else "_" for t in block]
        try:
            heads = [0] + [int(t.columns[-1]) for t in block]
        except ValueError:
            raise DataError(f"{path}: head column must be an integer") from None
        if any(not 0 <= h <= len(words) for h in heads[1:]):
            raise DataError(f"{path}: head index out of range in sentence {len(out) + 1}")
        if not is_projective(heads):
            if skip_nonprojective:
                log.warning("skipping non-projective sentence %d", len(out) + 1)
                continue
            raise DataError(f"{path}: non-projective sentence {len(out) + 1}")
        out.append(DepSentence(words, tags, heads))
    return out


def parser_features(sent: DepSentence, state: ParserState, bits: int):
    def word(i):
        return "<root>" if i == ROOT else sent.words[i - 1]

    def tag(i):
        return "<root>" if i == ROOT else sent.tags[i - 1]

    st, bf = state.stack, state.buffer
    s0 = st[-1] if st else None
    s1 = st[-2] if len(st) >= 2 else None
    b0 = bf[0] if bf else None
    b1 = bf[1] if len(bf) >= 2 else None
    fb = FeatureBuilder(bits)
    slots = {"s0": s0, "s1": s1, "b0": b0, "b1": b1}
    vals = {}
    for name, i in slots.items():
        w = "<none>" if i is None else word(i)
        p = "<none>" if i is None else tag(i)
        vals[name] = (w, p)
        fb.add("dw", f"{name}={w}").add("dp", f"{name}={p}")
        if i is not None and i != ROOT:
            fb.add("da", f"{name}+2={w[:2]}").add("da", f"{name}-2={w[-2:]}")
    fb.add("dc", f"s0b0={vals['s0'][0]}|{vals['b0'][0]}")
    fb.add("dc", f"s1s0={vals['s1'][0]}|{vals['s0'][0]}")
    fb.add("dc", f"s1s0b0p={vals['s1'][1]}|{vals['s0'][1]}|{vals['b0'][1]}")
    fb.add("dc", f"s0b0b1p={vals['s0'][1]}|{vals['b0'][1]}|{vals['b1'][1]}")
    fb.add("dc", f"nbuf={min(len(bf), 3)} nstack={min(len(st), 3)}")
    fb.add("db", "bias")
    return fb.build()


def run_dep_parser(session, sent: DepSentence, bits: int = DEFAULT_BITS, oracle: str = "exhaustive") -> list:
    state = ParserState.initial(len(sent))
    gold = sent.gold_heads
    step = 0
    while state.buffer or len(state.stack) > 1:
        step += 1
        valid = dep_valid_actions(state)
        if not valid:
            raise AssertionError("non-terminal parser state without a valid action")
        s = state
        action = session.predict(
            lambda s=s: parser_features(sent, s, bits),
            lambda s=s: dep_gold_action(s, gold, oracle),
            tag=step,
            # features depend on the whole configuration, hence on every earlier decision
            condition=tuple(range(1, step)),
            allowed=valid,
        )
        state = dep_trans(state, action)
    session.declare_loss(float(attachment_loss(state.heads, gold)))
    return list(state.heads[1:])


class DependencyParserTask:
    num_actions = 3
    labels = list(ACTION_NAMES)
    # loss is declared once, at the end
    history_independent = False

    def __init__(self, bits: int = DEFAULT_BITS, oracle: str = "exhaustive"):
        if oracle not in ("exhaustive", "closed_form"):
            raise ValueError(f"unknown oracle {oracle!r}")
        self.bits = bits
        self.oracle = oracle

    def run(self, session, sent: DepSentence) -> list:
        return run_dep_parser(session, sent, self.bits, self.oracle)
