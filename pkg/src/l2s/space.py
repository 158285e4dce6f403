"""Explicit search spaces and their correspondence with task programs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Hashable

from .dataio import DEFAULT_BITS, FeatureBuilder
from .errors import ConfigurationError, NonTerminationError


@dataclass
class ExplicitSearchSpace:
    """States, ordered successor lists, end states and their losses."""

    start: Hashable
    successors: dict
    end: set
    loss: dict
    _best: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def states(self) -> set:
        out = {self.start} | set(self.successors) | set(self.end)
        for nxt in self.successors.values():
            out.update(nxt)
        return out

    def next(self, s) -> list:
        return [] if s in self.end else list(self.successors.get(s, ()))

    def validate(self) -> None:
        for e in self.end:
            if self.successors.get(e):
                raise ConfigurationError(f"end state {e!r} has successors")
            if e not in self.loss or self.loss[e] < 0:
                raise ConfigurationError(f"end state {e!r} needs a non-negative loss")
        for s in self.states:
            if s not in self.end and not self.successors.get(s):
                raise ConfigurationError(f"state {s!r} is neither an end state nor has successors")

    def best_loss(self, s) -> float:
        """Smallest end-state loss reachable from ``s`` (iterative DFS, memoized)."""
        if s in self._best:
            return self._best[s]
        stack = [(s, False)]
        on_path = set()
        while stack:
            node, done = stack.pop()
            if node in self._best:
                continue
            if node in self.end:
                self._best[node] = self.loss[node]
                continue
            if done:
                on_path.discard(node)
                self._best[node] = min(self._best[c] for c in self.successors[node])
                continue
            if node in on_path:
                raise NonTerminationError(f"cycle through state {node!r}")
            on_path.add(node)
            stack.append((node, True))
            stack.extend((c, False) for c in self.successors[node] if c not in self._best)
        return self._best[s]


def run_explicit_space(session, space: ExplicitSearchSpace, bits: int = DEFAULT_BITS):
    """Walk ``space`` letting ``session`` pick successor indices.

    Features are a one-hot of the state id; the reference picks a successor
    with the smallest reachable loss. Returns (end state, loss).
    """
    s = space.start
    limit = len(space.states)
    steps = 0
    while s not in space.end:
        nxt = space.next(s)
        if not nxt:
            raise ConfigurationError(f"state {s!r} has no successors and is not an end state")
        steps += 1
        if steps > limit:
            raise NonTerminationError(f"walk exceeded {limit} steps; the space has a cycle")
        cur = s
        idx = session.predict(
            lambda cur=cur: FeatureBuilder(bits).add("s", repr(cur)).build(),
            lambda nxt=nxt: min(range(len(nxt)), key=lambda i: space.best_loss(nxt[i])),
            tag=steps,
            condition=tuple(range(1, steps)),
            allowed=tuple(range(len(nxt))),
        )
        s = nxt[idx]
    loss = space.loss[s]
    session.declare_loss(loss)
    return s, loss


class ExplicitSpaceTask:
    """Adapter so the trainer can learn a policy for an explicit space."""

    history_independent = False

    def __init__(self, max_branching: int, bits: int = DEFAULT_BITS):
        self.num_actions = max_branching
        self.bits = bits

    def run(self, session, space: ExplicitSearchSpace):
        return run_explicit_space(session, space, self.bits)


class _Halt(Exception):
    pass


class _ReplaySession:
    """Replays a fixed prefix of answers, then halts at the next decision."""

    def __init__(self, prefix: tuple, num_actions: int):
        self.prefix = prefix
        self.k = num_actions
        self.t = 0
        self.loss_acc = 0.0
        self.frontier: tuple | None = None

    def predict(self, features, ref=None, tag=None, condition=(), allowed=None):
        if self.t < len(self.prefix):
            a = self.prefix[self.t]
            self.t += 1
            return a
        self.frontier = tuple(sorted(allowed)) if allowed is not None else tuple(range(self.k))
        raise _Halt

    def declare_loss(self, val):
        self.loss_acc += val

    loss = declare_loss


def program_search_space(run: Callable[[Any], Any], num_actions: int, max_states: int = 100_000) -> ExplicitSearchSpace:
    """Search space of a deterministic task program.

    ``run(session)`` executes the program. States are tuples of the answers
    given so far; a state is an end state when the program terminates after
    exactly those answers, and its loss is the loss the program reported.
    """
    successors: dict = {}
    end: set = set()
    loss: dict = {}
    todo = [()]
    while todo:
        s = todo.pop()
        if len(successors) + len(end) > max_states:
            raise NonTerminationError(f"program has more than {max_states} states")
        sess = _ReplaySession(s, num_actions)
        try:
            run(sess)
        except _Halt:
            kids = [s + (a,) for a in sess.frontier]
            successors[s] = kids
            todo.extend(kids)
        else:
            end.add(s)
            loss[s] = sess.loss_acc
    return ExplicitSearchSpace((), successors, end, loss)
