"""Rollin/rollout credit assignment over task programs.

A task is any object with a ``run(session, x)`` method that calls
``session.predict(...)`` for every decision and ``session.declare_loss(...)``
to report loss. Training re-executes ``run`` once as a rollin and once per
one-step deviation; the session's mode decides what ``predict`` returns.

Task objects also carry ``num_actions`` and ``history_independent`` (true
when loss is declared incrementally and decomposes over the trajectory).
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import asdict, dataclass, fields
from typing import Any, Callable, Optional, Protocol, Sequence

from .cslearn import CostSensitiveExample, LinearCSModel
from .dataio import FeatureVector
from .errors import ConfigurationError, ContractError

ROLLIN = "rollin"
DEVIATION = "deviation"
TEST = "test"

REFERENCE = "reference"
LEARNED = "learned"

ALGORITHMS = ("dagger", "searn", "lols")
ROLLIN_SOURCES = ("learned", "mix", "ref")
ROLLOUT_SOURCES = ("ref", "learned", "mix", "none")

# (default rollin, default rollout) per algorithm
_ALGORITHM_DEFAULTS = {
    "lols": ("learned", "mix"),
    "searn": ("mix", "mix"),
    "dagger": ("mix", "none"),
}


class Task(Protocol):
    num_actions: int
    history_independent: bool

    def run(self, session: Any, x: Any) -> Any: ...


@dataclass
class Counters:
    run_executions: int = 0
    policy_calls: int = 0
    memo_hits: int = 0
    memo_stores: int = 0
    rollout_steps: int = 0
    cs_examples: int = 0

    def __iadd__(self, other: "Counters") -> "Counters":
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    def __add__(self, other: "Counters") -> "Counters":
        out = Counters(**asdict(self))
        out += other
        return out

    def as_dict(self) -> dict[str, int]:
        return asdict(self)

    def report(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in asdict(self).items())


@dataclass
class TrainerConfig:
    """Search algorithm and optimization settings.

    ``rollin``/``rollout`` default per algorithm when left as ``None``.
    ``beta`` is the interpolation rate: mixed policies consult the reference
    with probability ``(1 - beta) ** u`` where ``u`` counts model updates,
    except LOLS rollouts which use ``rollout_mix_prob``.
    """

    algorithm: str = "lols"
    rollin: Optional[str] = None
    rollout: Optional[str] = None
    beta: float = 1e-8
    rollout_mix_prob: float = 0.5
    collapse_h: Optional[int] = None
    subsample: float = 1.0
    passes: float = 1.0
    update_per_example: bool = False
    cache_enabled: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        rin, rout = _ALGORITHM_DEFAULTS[self.algorithm]
        if self.rollin is None:
            self.rollin = rin
        if self.rollout is None:
            self.rollout = rout
        if self.rollin not in ROLLIN_SOURCES:
            raise ConfigurationError(f"unknown rollin source {self.rollin!r}")
        if self.rollout not in ROLLOUT_SOURCES:
            raise ConfigurationError(f"unknown rollout source {self.rollout!r}")
        if self.algorithm == "dagger" and self.rollout != "none":
            raise ConfigurationError("dagger does not roll out; use rollout='none'")
        if self.algorithm != "dagger" and self.rollout == "none":
            raise ConfigurationError(f"{self.algorithm} needs a rollout policy")
        if not 0 < self.beta <= 1:
            raise ConfigurationError("interpolation beta must be in (0, 1]")
        if not 0 <= self.rollout_mix_prob <= 1:
            raise ConfigurationError("rollout_mix_prob must be in [0, 1]")
        if self.collapse_h is not None and self.collapse_h < 1:
            raise ConfigurationError("collapse horizon must be >= 1")
        if not 0 < self.subsample <= 1:
            raise ConfigurationError("subsample must be in (0, 1]")
        if not self.passes > 0:
            raise ConfigurationError("passes must be positive")


def tied_uniform(*key) -> float:
    """Uniform [0, 1) draw that is a pure function of ``key``."""
    digest = hashlib.blake2b(repr(key).encode("utf-8"), digest_size=8).digest()
    return (struct.unpack("<Q", digest)[0] >> 11) * (1.0 / (1 << 53))


def reference_probability(cfg: TrainerConfig, phase: str, update_count: int) -> float:
    source = cfg.rollin if phase == ROLLIN else cfg.rollout
    if source == "ref":
        return 1.0
    if source == "learned":
        return 0.0
    if phase != ROLLIN and cfg.algorithm == "lols":
        return cfg.rollout_mix_prob
    return (1.0 - cfg.beta) ** update_count


def choose_policy_tied(
    cfg: TrainerConfig,
    phase: str,
    t: int,
    example_id: int,
    pass_idx: int,
    update_count: int = 0,
) -> str:
    """Reference or learned for step ``t`` of the given example and pass.

    The coin depends only on (seed, example, pass, t, phase), so every
    trajectory of one example makes the same choice at the same step.
    """
    if phase not in (ROLLIN, "rollout"):
        raise ValueError(f"unknown phase {phase!r}")
    if phase == "rollout" and cfg.rollout == "none":
        raise ConfigurationError("no rollout policy configured")
    p_ref = reference_probability(cfg, phase, update_count)
    if p_ref >= 1.0:
        return REFERENCE
    if p_ref <= 0.0:
        return LEARNED
    coin = tied_uniform(cfg.seed, example_id, pass_idx, t, phase)
    return REFERENCE if coin < p_ref else LEARNED


def make_cost_vector(losses: Sequence[float]) -> list[float]:
    """Each loss minus the smallest one."""
    if not len(losses):
        raise ValueError("make_cost_vector needs at least one loss")
    for v in losses:
        if not math.isfinite(v):
            raise FloatingPointError(f"non-finite rollout loss {v}")
    lo = min(losses)
    return [v - lo for v in losses]


LearnedPolicy = Callable[[FeatureVector, Optional[Sequence[int]]], int]


def _resolve(value):
    return value() if callable(value) else value


class Session:
    """Mutable state for executions of one task program on one input.

    Users only call ``predict`` and ``declare_loss``. ``features`` and
    ``ref`` may be given as zero-argument callables; they are evaluated only
    when needed (cached prefix steps and memo hits skip them).
    """

    def __init__(
        self,
        num_actions: int,
        learned: LearnedPolicy,
        cfg: TrainerConfig | None = None,
        counters: Counters | None = None,
        example_id: int = 0,
        pass_idx: int = 0,
        update_count: int = 0,
        history_independent: bool = False,
    ):
        self.k = num_actions
        self.learned = learned
        self.cfg = cfg or TrainerConfig()
        self.counters = counters if counters is not None else Counters()
        self.example_id = example_id
        self.pass_idx = pass_idx
        self.update_count = update_count
        self.collapse_h = None
        if self.cfg.collapse_h is not None:
            if not history_independent:
                raise ConfigurationError(
                    "path collapse needs a task whose loss is declared history-independent"
                )
            self.collapse_h = self.cfg.collapse_h
        self.memo: dict | None = {} if self.cfg.cache_enabled else None
        self._coins: dict = {}
        self.mode = None
        self.active = False
        # rollin record
        self.T = 0
        self.ex: list[FeatureVector] = []
        self.allowed: list[tuple[int, ...]] = []
        self.refs: list = []
        self.cache: list[int] = []
        # per-run state
        self.t = 0
        self.t0 = 0
        self.a0 = 0
        self.loss_acc = 0.0
        self.losses: dict[int, float] = {}
        self.rollout_steps_taken = 0
        self.tag_actions: dict = {}

    # run lifecycle ---------------------------------------------------------

    def _begin(self, mode: str) -> None:
        self.mode = mode
        self.active = True
        self.t = 0
        self.rollout_steps_taken = 0
        self.tag_actions = {}
        self.counters.run_executions += 1

    def begin_rollin(self) -> None:
        self._begin(ROLLIN)
        self.T = 0
        self.ex, self.allowed, self.refs, self.cache = [], [], [], []
        self.loss_acc = 0.0

    def begin_deviation(self, t0: int, a0: int) -> None:
        if not 1 <= t0 <= self.T:
            raise ContractError(f"deviation step {t0} outside the rollin's 1..{self.T}")
        self._begin(DEVIATION)
        self.t0, self.a0 = t0, a0
        self.losses.setdefault(a0, 0.0)

    def begin_test(self) -> None:
        self._begin(TEST)
        self.loss_acc = 0.0

    def end_run(self) -> None:
        self.active = False

    def run(self, task: Task, x: Any) -> Any:
        try:
            return task.run(self, x)
        finally:
            self.end_run()

    # user API --------------------------------------------------------------

    def predict(
        self,
        features,
        ref=None,
        tag: int | None = None,
        condition: Sequence[int] = (),
        allowed: Sequence[int] | None = None,
    ) -> int:
        """One decision.

        ``tag`` names this decision for memoization (defaults to the step
        number) and ``condition`` lists the tags of earlier decisions the
        features depend on. ``allowed`` restricts the action set.
        """
        if not self.active:
            raise ContractError("predict called outside an active run")
        if self.mode == DEVIATION and self.t + 1 < self.t0:
            # replayed prefix: identical to the rollin, already validated there
            self.t += 1
            a = self.cache[self.t - 1]
            self.tag_actions[self.t if tag is None else tag] = a
            return a
        if allowed is not None:
            allowed = tuple(sorted(allowed))
            if not allowed:
                raise ContractError("allowed action set is empty")
            if allowed[-1] >= self.k or allowed[0] < 0:
                raise ConfigurationError(f"allowed action outside [0, {self.k})")
        mode = self.mode
        self.t += 1
        t = self.t
        if tag is None:
            tag = t
        if mode == DEVIATION:
            if t == self.t0:
                a = self.a0
            elif self.collapse_h is not None and self.rollout_steps_taken >= self.collapse_h:
                a = allowed[0] if allowed is not None else 0
            else:
                self.rollout_steps_taken += 1
                self.counters.rollout_steps += 1
                sel = self._selector("rollout", t)
                a = self.memo_lookup_or_call(sel, tag, condition, features, ref, allowed)
        elif mode == ROLLIN:
            self.T = t
            fv = _resolve(features)
            self.ex.append(fv)
            self.allowed.append(allowed if allowed is not None else tuple(range(self.k)))
            self.refs.append(ref)
            sel = self._selector(ROLLIN, t)
            a = self._call(sel, fv, ref, allowed)
            self.counters.policy_calls += 1
            if self.memo is not None:
                self.memo[self._memo_key(sel, tag, condition)] = a
                self.counters.memo_stores += 1
            self.cache.append(a)
        else:
            a = self._call(LEARNED, features, None, allowed)
            self.counters.policy_calls += 1
        self.tag_actions[tag] = a
        return a

    def declare_loss(self, val: float) -> None:
        if not self.active:
            raise ContractError("loss declared outside an active run")
        if not 0.0 <= val < math.inf:
            if val < 0:
                raise ContractError(f"negative loss {val} rejected")
            raise ContractError(f"non-finite loss {val}")
        if self.mode == DEVIATION:
            self.losses[self.a0] += val
        else:
            # rollin losses are bookkeeping only; they never reach losses[]
            self.loss_acc += val

    loss = declare_loss

    # internals -------------------------------------------------------------

    def _selector(self, phase: str, t: int) -> str:
        key = (phase, t)
        sel = self._coins.get(key)
        if sel is None:
            sel = choose_policy_tied(self.cfg, phase, t, self.example_id, self.pass_idx, self.update_count)
            self._coins[key] = sel
        return sel

    def _call(self, sel: str, features, ref, allowed) -> int:
        if sel == REFERENCE:
            a = _resolve(ref)
            if a is None:
                raise ContractError("reference policy selected but predict got no ref")
            if allowed is not None and a not in allowed:
                raise ContractError(f"reference action {a} is not in the allowed set {allowed}")
            if not 0 <= a < self.k:
                raise ConfigurationError(f"reference action {a} outside [0, {self.k})")
            return a
        a = self.learned(_resolve(features), allowed)
        if not 0 <= a < self.k:
            raise ConfigurationError(f"policy returned action {a} outside [0, {self.k})")
        return a

    def _memo_key(self, sel: str, tag, condition):
        try:
            preds = tuple(self.tag_actions[c] for c in condition)
        except KeyError as exc:
            raise ContractError(f"condition tag {exc.args[0]} was never predicted in this trajectory") from None
        return (tag, tuple(condition), preds, sel)

    def memo_lookup_or_call(self, sel: str, tag, condition, features, ref, allowed) -> int:
        """Serve a rollout decision from the memo table or the policy.

        The key is (tag, condition tags, their current predictions, policy
        selector); the user guarantees equal keys imply equal predictions.
        """
        if self.memo is None:
            self.counters.policy_calls += 1
            return self._call(sel, features, ref, allowed)
        key = self._memo_key(sel, tag, condition)
        a = self.memo.get(key)
        if a is not None:
            self.counters.memo_hits += 1
            return a
        a = self._call(sel, features, ref, allowed)
        self.counters.policy_calls += 1
        self.memo[key] = a
        self.counters.memo_stores += 1
        return a


def sampled_positions(cfg: TrainerConfig, T: int, example_id: int, pass_idx: int, rate: float) -> list[int]:
    if rate >= 1.0:
        return list(range(1, T + 1))
    return [
        t0 for t0 in range(1, T + 1)
        if tied_uniform(cfg.seed, example_id, pass_idx, t0, "subsample") < rate
    ]


def learn_example(
    task: Task,
    x: Any,
    model: LinearCSModel,
    cfg: TrainerConfig,
    example_id: int = 0,
    pass_idx: int = 0,
    subsample: float | None = None,
    policy: LearnedPolicy | None = None,
) -> Counters:
    """One rollin plus one-step deviations on ``x``; updates ``model``.

    ``policy`` overrides the learned policy (defaults to ``model.predict``).
    ``subsample`` overrides ``cfg.subsample`` for this call.
    """
    if task.num_actions > model.k:
        raise ConfigurationError(f"task needs {task.num_actions} actions, model has {model.k}")
    counters = Counters()
    sess = Session(
        task.num_actions,
        policy or model.predict,
        cfg,
        counters,
        example_id=example_id,
        pass_idx=pass_idx,
        update_count=model.update_count,
        history_independent=task.history_independent,
    )
    sess.begin_rollin()
    sess.run(task, x)
    T = sess.T
    rate = cfg.subsample if subsample is None else subsample
    pending: list[CostSensitiveExample] = []

    def emit(ex: CostSensitiveExample) -> None:
        counters.cs_examples += 1
        if cfg.update_per_example:
            pending.append(ex)
        else:
            model.update(ex)

    for t0 in sampled_positions(cfg, T, example_id, pass_idx, rate):
        allowed = sess.allowed[t0 - 1]
        if cfg.algorithm == "dagger":
            ref = _resolve(sess.refs[t0 - 1])
            if ref is None:
                raise ContractError(f"dagger needs a reference action at step {t0}")
            costs = [0.0 if a == ref else 1.0 for a in allowed]
        else:
            sess.losses = {}
            for a0 in allowed:
                sess.begin_deviation(t0, a0)
                sess.run(task, x)
            costs = make_cost_vector([sess.losses[a] for a in allowed])
        emit(CostSensitiveExample(sess.ex[t0 - 1], allowed, costs))
    for ex in pending:
        model.update(ex)
    return counters


def test_decode(task: Task, x: Any, model: LinearCSModel | LearnedPolicy, counters: Counters | None = None):
    """Run ``task`` once with the learned policy; returns (output, loss)."""
    learned = model.predict if isinstance(model, LinearCSModel) else model
    sess = Session(task.num_actions, learned, counters=counters)
    sess.begin_test()
    out = sess.run(task, x)
    return out, sess.loss_acc


test_decode.__test__ = False  # not a pytest test


class ScriptedSession:
    """Session stand-in driven by a plain function, for decoding without a model.

    ``choose(step, allowed, ref)`` returns an action; ``allowed`` is the
    explicit tuple (``range(num_actions)`` when the task gave none).
    """

    def __init__(self, choose: Callable[[int, tuple, Any], int], num_actions: int):
        self.choose = choose
        self.k = num_actions
        self.t = 0
        self.loss_acc = 0.0
        self.trace: list[tuple[int, tuple]] = []

    def predict(self, features, ref=None, tag=None, condition=(), allowed=None) -> int:
        self.t += 1
        allowed = tuple(sorted(allowed)) if allowed is not None else tuple(range(self.k))
        a = self.choose(self.t, allowed, ref)
        if a not in allowed:
            raise ContractError(f"scripted choice {a} not in {allowed}")
        self.trace.append((a, allowed))
        return a

    def declare_loss(self, val: float) -> None:
        if val < 0 or not math.isfinite(val):
            raise ContractError(f"invalid loss {val}")
        self.loss_acc += val

    loss = declare_loss


def reference_choice(step, allowed, ref):
    return _resolve(ref)


def run_scripted(task: Task, x: Any, choose: Callable) -> tuple[Any, float]:
    sess = ScriptedSession(choose, task.num_actions)
    out = task.run(sess, x)
    return out, sess.loss_acc
