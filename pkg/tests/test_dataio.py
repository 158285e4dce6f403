from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l2s.dataio import (
    BOS,
    EOS,
    FeatureBuilder,
    FeatureVector,
    LabelDict,
    Sentence,
    TemplateSpec,
    Token,
    affix_namespace,
    apply_templates,
    fnv1a_64,
    hash_feature,
    read_columns,
    read_conll,
    read_entity_relation,
    sentence_features,
    write_conll,
)
from l2s.errors import ConfigurationError, DataError

FIXTURES = Path(__file__).parent / "fixtures"


def reference_fnv1a_64(data: bytes) -> int:
    # written independently of the package: textbook FNV-1a with 64-bit wraparound
    h = 14695981039346656037
    for b in data:
        h ^= b
        h = (h * 1099511628211) % 2**64
    return h


# published FNV-1a 64 test vectors
@pytest.mark.parametrize(
    "data, expected",
    [(b"", 0xCBF29CE484222325), (b"a", 0xAF63DC4C8601EC8C), (b"foobar", 0x85944171F73967E8)],
)
def test_fnv_known_vectors(data, expected):
    assert reference_fnv1a_64(data) == expected
    assert fnv1a_64(data) == expected


def test_hash_feature_the_frozen():
    # frozen from the reference implementation above
    assert reference_fnv1a_64(b"w\x1fthe") == 0xEC0328E70412B18E
    assert hash_feature("w", "the", 18) == 0x2B18E
    assert hash_feature("w", "the", 18) == hash_feature("w", "the", 18)


@given(st.text(min_size=1, max_size=4), st.text(max_size=20), st.integers(8, 31))
def test_hash_feature_bound_and_reference(ns, name, bits):
    idx = hash_feature(ns, name, bits)
    assert 0 <= idx < 2**bits
    assert idx == reference_fnv1a_64(ns.encode() + b"\x1f" + name.encode()) & (2**bits - 1)


@pytest.mark.parametrize("bits", [7, 32, 0])
def test_hash_feature_rejects_bits(bits):
    with pytest.raises(ConfigurationError):
        hash_feature("w", "x", bits)


def test_collision_rate_at_18_bits():
    idx = {hash_feature("w", f"name{i}", 18) for i in range(10_000)}
    assert 1 - len(idx) / 10_000 < 0.05


def test_namespaces_separate_same_name():
    assert hash_feature("w", "x") != hash_feature("p", "x")


def test_feature_builder_merges_duplicates():
    fv = FeatureBuilder(10).add("w", "a").add("w", "a", 2.0).add("w", "b").build()
    entries = dict(fv.entries())
    assert entries[hash_feature("w", "a", 10)] == 3.0
    assert len(fv) == 2


def test_feature_builder_rejects_nonfinite():
    with pytest.raises(ValueError):
        FeatureBuilder().add("w", "a", float("nan"))


def test_with_features_sums_overlaps():
    fv = FeatureBuilder(12).add("w", "a").build()
    i = hash_feature("w", "a", 12)
    out = fv.with_features([(i, 1.0), (5, 0.5)], "h")
    assert dict(out.entries()) == {i: 2.0, 5: 0.5}
    assert FeatureVector.empty().entries() == []


def _write(tmp_path, text, name="c.txt"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_read_conll_separator_semantics(tmp_path):
    p = _write(tmp_path, "a X\nb Y\n\nc X\n")
    sents = read_conll(p)
    assert [len(s) for s in sents] == [2, 1]
    assert sents[0].gold_labels == [0, 1]
    assert sents[1].gold_labels == [0]


def test_read_conll_empty(tmp_path):
    assert read_conll(_write(tmp_path, "")) == []


def test_read_conll_ragged_names_line(tmp_path):
    p = _write(tmp_path, "a X\nb Y\n\nc d X\n")
    with pytest.raises(DataError, match=":4:"):
        read_conll(p)


def test_read_conll_multiple_blank_lines(tmp_path):
    assert [len(s) for s in read_conll(_write(tmp_path, "\n\na X\n\n\n\nb Y\n\n"))] == [1, 1]


def test_bio_fixture_has_seven_labels():
    labels = LabelDict()
    sents = read_conll(FIXTURES / "bio5.txt", labels=labels)
    assert len(sents) == 5
    assert len(labels) == 7


def test_frozen_labels_reject_unknown(tmp_path):
    labels = LabelDict(["X"]).freeze()
    with pytest.raises(DataError, match="'Y'"):
        read_conll(_write(tmp_path, "a X\nb Y\n"), labels=labels)


def test_label_dict_first_appearance_order():
    d = LabelDict(["b", "a", "b", "c"])
    assert d.names == ["b", "a", "c"]
    assert d.id("c") == 2 and d.name(1) == "a"


def test_conll_round_trip(tmp_path):
    labels = LabelDict()
    sents = read_conll(FIXTURES / "bio5.txt", labels=labels)
    out = tmp_path / "rt.txt"
    write_conll(sents, out)
    again = read_conll(out, labels=LabelDict(labels.names))
    assert [s.tokens for s in again] == [s.tokens for s in sents]
    assert [s.gold_labels for s in again] == [s.gold_labels for s in sents]
    assert out.read_text() == (FIXTURES / "bio5.txt").read_text() + "\n"


def _sent(words):
    return Sentence([Token((w,)) for w in words], [0] * len(words))


def test_templates_boundary_sentinels():
    spec = TemplateSpec(neighbor_features=((-1, "w"), (1, "w")), columns=(("w", 0),))
    fv = apply_templates(_sent(["only"]), 0, spec, 18)
    idx = set(fv.indices.tolist())
    assert hash_feature("w", f"-1={BOS}") in idx
    assert hash_feature("w", f"1={EOS}") in idx


def test_templates_neighbor_count():
    spec = TemplateSpec(neighbor_features=((-1, "w"), (1, "w")), columns=(("w", 0),))
    fv = apply_templates(_sent(["a", "b", "c"]), 1, spec, 18)
    # two neighbors plus bias
    assert len(fv) == 3
    assert np.all(fv.values == 1.0)


def test_templates_suffix_affix():
    spec = TemplateSpec(neighbor_features=(), affix_specs=((2, "suffix", "w"),), columns=(("w", 0),))
    fv = apply_templates(_sent(["years"]), 0, spec, 18)
    assert hash_feature(affix_namespace("w", 2, "suffix"), "years"[-2:]) in fv.indices.tolist()
    assert "years"[-2:] == "rs"


def test_template_parse():
    spec = TemplateSpec.parse("-1:w,1:w", "-2w,+3w", "w,p")
    assert spec.neighbor_features == ((-1, "w"), (1, "w"))
    assert spec.affix_specs == ((2, "suffix", "w"), (3, "prefix", "w"))
    assert spec.column("p") == 1


@pytest.mark.parametrize("neighbors, affixes", [("x:w", ""), ("0:w,0:w", ""), ("0:w", "-9w"), ("0:w", "2w")])
def test_template_parse_rejects(neighbors, affixes):
    with pytest.raises(ConfigurationError):
        TemplateSpec.parse(neighbors, affixes)


def test_templates_out_of_range_position():
    with pytest.raises(IndexError):
        apply_templates(_sent(["a"]), 1, TemplateSpec(columns=(("w", 0),)))


@settings(max_examples=50)
@given(st.lists(st.sampled_from(["a", "bb", "ccc", "dddd"]), min_size=1, max_size=6))
def test_templates_independent_of_prediction_state(words):
    spec = TemplateSpec(neighbor_features=((-1, "w"), (0, "w"), (2, "w")), columns=(("w", 0),))
    sent = _sent(words)
    first = [fv.entries() for fv in sentence_features(sent, spec)]
    fresh = [apply_templates(_sent(words), i, spec).entries() for i in range(len(words))]
    assert first == fresh


def test_read_columns_blocks():
    blocks = read_columns(FIXTURES / "three_tokens.txt")
    assert len(blocks) == 1 and blocks[0][1].columns == ("b", "y")


def test_read_entity_relation(tmp_path):
    recs = read_entity_relation(FIXTURES / "entrel_train.jsonl")
    assert len(recs) == 4 and recs[0]["entities"][1]["gold_type"] == "Organization"
    bad = _write(tmp_path, '{"entities": [{"span": "x"}], "relations": []}\n', "b.jsonl")
    with pytest.raises(DataError, match="gold_type"):
        read_entity_relation(bad)
    with pytest.raises(DataError, match=":1:"):
        read_entity_relation(_write(tmp_path, "{nope\n", "c.jsonl"))
