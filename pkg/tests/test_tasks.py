import itertools
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l2s.core import Session, TrainerConfig, learn_example, run_scripted, test_decode as decode_once
from l2s.cslearn import LinearCSModel
from l2s.dataio import LabelDict, Sentence, Token, read_conll
from l2s.errors import ConfigurationError, ContractError, DataError
from l2s.tasks import (
    BIOConstraint,
    BIOTask,
    DependencyParserTask,
    DepSentence,
    DetectionTask,
    EntityRelationTask,
    ParserState,
    RelationConstraintTable,
    SequenceTask,
    SequenceTaskConfig,
    bio_valid_labels,
    dep_gold_action,
    dep_trans,
    dep_valid_actions,
    find_valid_relations,
    read_dependency_corpus,
    run_detection,
)
from l2s.tasks.depparse import (
    LEFT_ARC,
    RIGHT_ARC,
    SHIFT,
    attachment_loss,
    closed_form_action_costs,
    exhaustive_action_costs,
    is_projective,
    min_completion_loss,
)

FIXTURES = Path(__file__).parent / "fixtures"

BIO = ["O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG", "B-MISC", "I-MISC"]


def ref_choice(step, allowed, ref):
    return ref() if callable(ref) else ref


def sent_of(words, labels):
    return Sentence([Token((w,)) for w in words], labels)


# ---------------------------------------------------------------------------
# sequence labeling


def test_sequence_oracle_policy_zero_loss():
    s = sent_of("a b c d".split(), [2, 0, 1, 1])
    out, loss = run_scripted(SequenceTask(3), s, ref_choice)
    assert out == [2, 0, 1, 1] and loss == 0


def test_sequence_constant_policy_loss():
    s = sent_of("a b c d".split(), [2, 0, 1, 1])
    out, loss = run_scripted(SequenceTask(3), s, lambda step, allowed, ref: 1)
    assert loss == sum(g != 1 for g in [2, 0, 1, 1])


def test_sequence_condition_tags_markov_one():
    seen = {}

    class Spy:
        def predict(self, features, ref=None, tag=None, condition=(), allowed=None):
            seen[tag] = tuple(condition)
            return 0

        def declare_loss(self, v):
            pass

    SequenceTask(2, SequenceTaskConfig(markov_order=1)).run(Spy(), sent_of(list("abcdef"), [0] * 6))
    assert seen[5] == (4,)
    assert seen[1] == ()


def test_sequence_condition_tags_markov_two():
    seen = {}

    class Spy:
        def predict(self, features, ref=None, tag=None, condition=(), allowed=None):
            seen[tag] = tuple(condition)
            return 0

        def declare_loss(self, v):
            pass

    SequenceTask(2, SequenceTaskConfig(markov_order=2)).run(Spy(), sent_of(list("abcd"), [0] * 4))
    assert seen == {1: (), 2: (1,), 3: (1, 2), 4: (2, 3)}


def test_history_features_change_with_prediction():
    from l2s.tasks.sequence import position_features

    cfg = SequenceTaskConfig(markov_order=1, label_names=["A", "B"])
    s = sent_of(list("ab"), [0, 0])
    assert position_features(s, 1, (0,), cfg).entries() != position_features(s, 1, (1,), cfg).entries()


def test_markov_zero_features_ignore_predictions():
    recorded = []

    class Spy:
        def __init__(self, action):
            self.action = action

        def predict(self, features, ref=None, tag=None, condition=(), allowed=None):
            fv = features() if callable(features) else features
            recorded.append((self.action, tag, tuple(fv.entries()), allowed))
            return self.action

        def declare_loss(self, v):
            pass

    task = SequenceTask(3, SequenceTaskConfig(markov_order=0))
    s = sent_of(list("abc"), [0, 1, 2])
    for a in (0, 1, 2):
        task.run(Spy(a), s)
    by_action = {a: [r[1:] for r in recorded if r[0] == a] for a in (0, 1, 2)}
    assert by_action[0] == by_action[1] == by_action[2]


def test_negative_markov_order():
    with pytest.raises(ConfigurationError):
        SequenceTaskConfig(markov_order=-1)


def test_sequence_memorizes_three_token_fixture():
    sents = read_conll(FIXTURES / "three_tokens.txt")
    task = SequenceTask(2)
    model = LinearCSModel(18, 2)
    for p in range(10):
        learn_example(task, sents[0], model, TrainerConfig(), pass_idx=p)
    out, loss = decode_once(task, sents[0], model)
    assert loss == 0 and out == sents[0].gold_labels


def test_zero_model_three_token_fixture():
    sents = read_conll(FIXTURES / "three_tokens.txt")
    out, loss = decode_once(SequenceTask(2), sents[0], LinearCSModel(18, 2))
    assert out == [0, 0, 0]
    assert loss == sum(g != 0 for g in sents[0].gold_labels)


# ---------------------------------------------------------------------------
# BIO


def test_bio_after_o():
    allowed = {BIO[i] for i in bio_valid_labels(BIO.index("O"), BIO)}
    assert allowed == {"O", "B-PER", "B-LOC", "B-ORG", "B-MISC"}
    assert {BIO[i] for i in bio_valid_labels(None, BIO)} == allowed


def test_bio_after_b_loc():
    allowed = {BIO[i] for i in bio_valid_labels(BIO.index("B-LOC"), BIO)}
    assert "I-LOC" in allowed and "I-PER" not in allowed


def test_bio_after_i_org():
    assert BIO.index("I-ORG") in bio_valid_labels(BIO.index("I-ORG"), BIO)


def test_bio_rejects_non_bio_labels():
    with pytest.raises(ConfigurationError):
        BIOConstraint(["O", "PER"])


def test_bio_reference_repair():
    c = BIOConstraint(BIO)
    assert c.repair(BIO.index("I-LOC"), BIO.index("O")) == BIO.index("B-LOC")
    assert c.repair(BIO.index("I-LOC"), BIO.index("B-LOC")) == BIO.index("I-LOC")


def _bio_ok(labels):
    prev = "O"
    for lab in labels:
        if lab.startswith("I-") and prev[2:] != lab[2:]:
            return False
        prev = lab
    return True


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_bio_decode_random_model_is_well_formed(seed):
    rng = np.random.default_rng(seed)
    task = BIOTask(BIO, SequenceTaskConfig(bits=10))
    model = LinearCSModel(10, len(BIO))
    model.weights[:] = rng.normal(size=model.weights.shape)
    words = [f"w{int(i)}" for i in rng.integers(0, 50, size=8)]
    out, _ = decode_once(task, sent_of(words, [0] * 8), model)
    assert _bio_ok([BIO[a] for a in out])


def test_bio_zero_model_fixture_decodes_o():
    labels = LabelDict()
    sents = read_conll(FIXTURES / "bio5.txt", labels=labels)
    task = BIOTask(labels.names)
    for s in sents:
        out, _ = decode_once(task, s, LinearCSModel(18, len(labels)))
        assert _bio_ok([labels.name(a) for a in out])


def test_bio_training_deviations_respect_allowed():
    labels = LabelDict()
    sents = read_conll(FIXTURES / "bio5.txt", labels=labels)
    task = BIOTask(labels.names)
    model = LinearCSModel(18, len(labels))
    for p in range(8):
        for i, s in enumerate(sents):
            learn_example(task, s, model, TrainerConfig(), example_id=i, pass_idx=p)
    for s in sents:
        out, _ = decode_once(task, s, model)
        assert _bio_ok([labels.name(a) for a in out])


# ---------------------------------------------------------------------------
# detection


class ForceSession:
    """Returns scripted per-step actions and records declared loss."""

    def __init__(self, actions):
        self.actions = list(actions)
        self.loss_acc = 0.0

    def predict(self, features, ref=None, tag=None, condition=(), allowed=None):
        return self.actions.pop(0)

    def declare_loss(self, v):
        self.loss_acc += v


@pytest.mark.parametrize(
    "gold, pred, expected",
    [
        ([0, 1, 0], [0, 0, 0], 10.0),  # gold max 2, predicted max 1
        ([0, 1, 0], [1, 0, 0], 0.0),  # equal maxima
        ([0, 0, 0], [0, 1, 0], 1.0),  # gold max 1, predicted max 2
    ],
)
def test_detection_asymmetric_loss(gold, pred, expected):
    sess = ForceSession(pred)
    sink = []
    top = run_detection(sess, sent_of(list("abc"), gold), 10.0, output=sink)
    assert sess.loss_acc == expected
    assert sink == [top] == [max(pred) + 1]


def test_detection_config():
    with pytest.raises(ConfigurationError):
        DetectionTask(3, false_negative_loss=0)
    assert DetectionTask(3).history_independent is False
    with pytest.raises(ConfigurationError):
        Session(3, lambda f, a: 0, TrainerConfig(collapse_h=2), history_independent=DetectionTask(3).history_independent)


# ---------------------------------------------------------------------------
# entity-relation


@pytest.fixture(scope="module")
def table():
    return RelationConstraintTable.default()


def test_valid_relations_person_org(table):
    assert find_valid_relations("Person", "Organization", table) == {"work_for", "none"}


def test_valid_relations_location_person(table):
    assert find_valid_relations("Location", "Person", table) == {"none"}


def test_none_always_valid(table):
    for a, b in itertools.product(table.entity_types, repeat=2):
        assert "none" in find_valid_relations(a, b, table)


def test_unknown_type_is_configuration_error(table):
    with pytest.raises(ConfigurationError):
        find_valid_relations("Person", "Planet", table)


def test_table_parse():
    t = RelationConstraintTable.parse("# comment\nentity_types A B C\nr1 A B\nr2 B B # tail\n")
    assert t.entity_types == ["A", "B", "C"]
    assert t.relation_types == ["none", "r1", "r2"]
    with pytest.raises(ConfigurationError):
        RelationConstraintTable.parse("r1 A\n")


def _entrel_records():
    from l2s.dataio import read_entity_relation

    return read_entity_relation(FIXTURES / "entrel_train.jsonl")


def test_entrel_prediction_counts(table):
    task = EntityRelationTask(table, bits=12)
    rec = _entrel_records()[0]
    calls = []

    class Counting:
        loss_acc = 0.0

        def predict(self, features, ref=None, tag=None, condition=(), allowed=None):
            calls.append((tag, tuple(condition)))
            return allowed[0] if allowed is not None else 0

        def declare_loss(self, v):
            pass

    task.run(Counting(), rec)
    assert len(calls) == 3 + 3
    K = 3
    assert calls[3:] == [(K * 2 + 2, (1, 2)), (K * 2 + 3, (1, 3)), (K * 3 + 3, (2, 3))]


def test_entrel_oracle_zero_loss(table):
    task = EntityRelationTask(table, bits=12)
    for rec in _entrel_records():
        out, loss = run_scripted(task, rec, ref_choice)
        assert loss == 0
        assert out.entity_types == [e["gold_type"] for e in rec["entities"]]
        gold = {(r["arg1"], r["arg2"], r["gold_type"]) for r in rec["relations"] if r["gold_type"] != "none"}
        assert set(out.relations) == gold


def test_entrel_allowed_follows_predicted_types(table):
    task = EntityRelationTask(table, bits=12)
    pe = task.pair_allowed(task.entity_id("Person"), task.entity_id("Organization"))
    assert task.relation_id("work_for") in pe
    ep = task.pair_allowed(task.entity_id("Organization"), task.entity_id("Person"))
    assert pe == ep


def test_entrel_unknown_gold_type(table):
    task = EntityRelationTask(table, bits=12)
    rec = {"entities": [{"span": "x", "gold_type": "Planet"}], "relations": []}
    with pytest.raises(ConfigurationError):
        run_scripted(task, rec, ref_choice)


def _relation_ok(task, types, rel):
    a1, a2, r = rel
    return r in find_valid_relations(types[a1], types[a2], task.table)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_entrel_random_model_respects_constraints(seed):
    table = RelationConstraintTable.default()
    task = EntityRelationTask(table, bits=10)
    rng = np.random.default_rng(seed)
    model = LinearCSModel(10, task.num_actions)
    model.weights[:] = rng.normal(size=model.weights.shape)
    for rec in _entrel_records():
        out, _ = decode_once(task, rec, model)
        for rel in out.relations:
            assert _relation_ok(task, out.entity_types, rel)


def test_entrel_learns_fixture(table):
    task = EntityRelationTask(table, bits=14)
    recs = _entrel_records()
    model = LinearCSModel(14, task.num_actions)
    for p in range(10):
        for i, rec in enumerate(recs):
            learn_example(task, rec, model, TrainerConfig(), example_id=i, pass_idx=p)
    for rec in recs:
        _, loss = decode_once(task, rec, model)
        assert loss == 0


# ---------------------------------------------------------------------------
# dependency parsing


def test_valid_actions():
    assert dep_valid_actions(ParserState((0,), (1,), (None, None))) == (SHIFT,)
    assert set(dep_valid_actions(ParserState((0, 1), (2,), (None,) * 3))) == {SHIFT, LEFT_ARC, RIGHT_ARC}
    assert dep_valid_actions(ParserState((0,), (), (None, 0))) == ()


def test_transitions():
    s = dep_trans(ParserState((0,), (1,), (None, None)), SHIFT)
    assert (s.stack, s.buffer) == ((0, 1), ())
    s = dep_trans(ParserState((0, 1), (2,), (None, None, None)), LEFT_ARC)
    assert (s.stack, s.buffer, s.heads[1]) == ((0,), (2,), 2)
    s = dep_trans(ParserState((0, 2), (), (None, 2, None)), RIGHT_ARC)
    assert (s.stack, s.buffer, s.heads[2]) == ((0,), (), 0)
    with pytest.raises(ContractError):
        dep_trans(ParserState((0,), (1,), (None, None)), LEFT_ARC)


def _dep(words, heads):
    return DepSentence(list(words), ["_"] * len(words), [0] + list(heads))


def test_one_word_forced_sequence():
    actions = []

    def choose(step, allowed, ref):
        actions.append(ref_choice(step, allowed, ref))
        return actions[-1]

    out, loss = run_scripted(DependencyParserTask(), _dep("a", [0]), choose)
    assert actions == [SHIFT, RIGHT_ARC] and loss == 0 and out == [0]


def test_two_word_reference_sequence():
    actions = []

    def choose(step, allowed, ref):
        actions.append(ref_choice(step, allowed, ref))
        return actions[-1]

    out, loss = run_scripted(DependencyParserTask(), _dep("ab", [2, 0]), choose)
    assert actions == [SHIFT, LEFT_ARC, SHIFT, RIGHT_ARC]
    assert loss == 0 and out == [2, 0]


def brute_force_loss(state, gold):
    """Minimum final attachment loss over every action sequence (no shortcuts)."""

    @lru_cache(maxsize=None)
    def go(s):
        if s.terminal:
            return attachment_loss(s.heads, gold)
        return min(go(dep_trans(s, a)) for a in dep_valid_actions(s))

    return go(state)


def test_initial_state_of_two_word_example_is_shift():
    gold = (0, 2, 0)
    s = ParserState.initial(2)
    assert dep_gold_action(s, gold) == SHIFT
    assert exhaustive_action_costs(s, gold)[SHIFT] == 0


def test_left_arc_when_gold_arc_available():
    gold = (0, 2, 0)
    s = dep_trans(ParserState.initial(2), SHIFT)
    assert dep_gold_action(s, gold) == LEFT_ARC


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_random_policy_loss_bounds(n, seed):
    rng = np.random.default_rng(seed)
    gold = [0] + [0] * n
    _, loss = run_scripted(
        DependencyParserTask(), _dep("abcd"[:n], gold[1:]),
        lambda step, allowed, ref: int(rng.choice(allowed)),
    )
    assert 0 <= loss <= n


def projective_trees(n):
    for heads in itertools.product(range(n + 1), repeat=n):
        h = (0,) + heads
        ok = True
        for i in range(1, n + 1):
            seen, j = set(), i
            while j != 0 and ok:
                if j in seen:
                    ok = False
                seen.add(j)
                j = h[j]
        if ok and is_projective(h):
            yield h


def reachable(n):
    start = ParserState.initial(n)
    seen, todo = {start}, [start]
    while todo:
        s = todo.pop()
        for a in dep_valid_actions(s):
            t = dep_trans(s, a)
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return seen


def test_oracle_against_brute_force_small():
    # the full sweep to five words lives in the acceptance suite
    for n in (1, 2, 3):
        states = reachable(n)
        for gold in projective_trees(n):
            for s in states:
                if s.terminal:
                    continue
                costs = exhaustive_action_costs(s, gold)
                for a, c in costs.items():
                    assert c == brute_force_loss(dep_trans(s, a), gold)
                act = dep_gold_action(s, gold)
                assert costs[act] == min(costs.values()) == brute_force_loss(s, gold)
                cf = closed_form_action_costs(s, gold)
                base = min_completion_loss(s, gold)
                assert cf == {a: c - base for a, c in costs.items()}


def test_is_projective():
    assert is_projective((0, 2, 0))
    assert not is_projective((0, 3, 4, 0, 3))


def test_read_dependency_corpus_skips_nonprojective(tmp_path, caplog):
    p = tmp_path / "t.txt"
    p.write_text("a X 2\nb X 0\n\na X 3\nb X 4\nc X 0\nd X 3\n", encoding="utf-8")
    sents = read_dependency_corpus(p)
    assert len(sents) == 1 and sents[0].gold_heads == [0, 2, 0]
    assert "non-projective" in caplog.text
    with pytest.raises(DataError):
        read_dependency_corpus(p, skip_nonprojective=False)


def test_read_dependency_corpus_bad_head(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("a X 5\n", encoding="utf-8")
    with pytest.raises(DataError):
        read_dependency_corpus(p)


def test_toy_treebank_loads():
    sents = read_dependency_corpus(FIXTURES / "toy_treebank.txt")
    assert len(sents) == 10
    for s in sents:
        _, loss = run_scripted(DependencyParserTask(), s, ref_choice)
        assert loss == 0


def test_parser_terminates_for_any_policy():
    s = read_dependency_corpus(FIXTURES / "toy_treebank.txt")[6]
    rng = np.random.default_rng(0)
    for _ in range(50):
        sess_steps = []

        def choose(step, allowed, ref):
            sess_steps.append(step)
            return int(rng.choice(allowed))

        run_scripted(DependencyParserTask(), s, choose)
        assert len(sess_steps) == 2 * len(s)
