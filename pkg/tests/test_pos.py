import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpndd.errors import DimensionMismatch, EmptyLexicon
from dpndd.pos import (PosProjection, build_projection, lexicon_from_tagged_sentences,
                       merge_lexicons, read_lexicon_tsv)


def test_build_direct_construction():
    proj = build_projection({"cat": {"NN"}, "runs": {"VBZ"}}, ["cat", "runs"])
    assert proj.class_names == ("NN", "VBZ", "OTHER")
    nn, vbz = proj.class_names.index("NN"), proj.class_names.index("VBZ")
    assert proj.membership[nn].tolist() == [1.0, 0.0]
    assert proj.membership[vbz].tolist() == [0.0, 1.0]
    assert proj.membership.sum(axis=0).tolist() == [1.0, 1.0]  # one class per column


def test_word_in_two_classes():
    proj = build_projection({"run": {"NN", "VB"}}, ["run"])
    nn, vb = proj.class_names.index("NN"), proj.class_names.index("VB")
    assert proj.membership[nn, 0] == 1.0
    assert proj.membership[vb, 0] == 1.0


def test_unknown_and_special_entries_go_to_other():
    proj = build_projection({"cat": {"NN"}}, ["cat", "zzyx", "##ing", "[CLS]"])
    other = proj.class_names.index("OTHER")
    assert proj.membership[other].tolist() == [0.0, 1.0, 1.0, 1.0]


def test_lowercase_fallback():
    proj = build_projection({"cat": {"NN"}}, ["Cat"])
    assert proj.membership[proj.class_names.index("NN"), 0] == 1.0


def test_empty_lexicon():
    with pytest.raises(EmptyLexicon):
        build_projection({}, ["cat"])


def test_project_hand_value():
    proj = build_projection({"w0": {"A"}, "w1": {"A"}, "w2": {"B"}}, ["w0", "w1", "w2"])
    q = proj.project(np.array([0.2, 0.3, 0.5]))
    assert np.allclose(q, [0.5, 0.5, 0.0], atol=1e-12)


def test_project_one_hot():
    proj = build_projection({"w0": {"A"}, "w1": {"B"}}, ["w0", "w1"])
    q = proj.project(np.array([0.0, 1.0]))
    assert q.tolist() == [0.0, 1.0, 0.0]


def test_double_membership_renormalizes():
    proj = build_projection({"w0": {"A", "B"}}, ["w0"])
    raw = proj.project_raw(np.array([1.0]))
    assert raw.tolist() == [1.0, 1.0, 0.0]  # pre-normalization mass 2
    q = proj.project(np.array([1.0]))
    assert np.allclose(q, [0.5, 0.5, 0.0])
    assert abs(q.sum() - 1.0) < 1e-12


def test_dimension_mismatch():
    proj = build_projection({"w0": {"A"}}, ["w0", "w1"])
    with pytest.raises(DimensionMismatch):
        proj.project(np.array([1.0]))


@given(st.lists(st.floats(1e-9, 1.0), min_size=4, max_size=4))
@settings(max_examples=50)
def test_project_output_is_distribution(raw):
    proj = build_projection(
        {"w0": {"A"}, "w1": {"A", "B"}, "w2": {"B"}}, ["w0", "w1", "w2", "w3"])
    d = np.array(raw) / np.sum(raw)
    q = proj.project(d)
    assert abs(q.sum() - 1.0) < 1e-9
    assert np.all(q >= 0)


@given(st.floats(0.0, 1.0), st.lists(st.floats(1e-9, 1.0), min_size=3, max_size=3),
       st.lists(st.floats(1e-9, 1.0), min_size=3, max_size=3))
@settings(max_examples=50)
def test_raw_projection_is_linear(alpha, raw1, raw2):
    proj = build_projection({"w0": {"A"}, "w1": {"B"}, "w2": {"A", "B"}},
                            ["w0", "w1", "w2"])
    d1 = np.array(raw1) / np.sum(raw1)
    d2 = np.array(raw2) / np.sum(raw2)
    mixed = proj.project_raw(alpha * d1 + (1 - alpha) * d2)
    combined = alpha * proj.project_raw(d1) + (1 - alpha) * proj.project_raw(d2)
    assert np.allclose(mixed, combined, atol=1e-12)


def test_save_load_round_trip(tmp_path):
    proj = build_projection({"cat": {"NN"}, "runs": {"VBZ", "NNS"}}, ["cat", "runs", "dog"])
    path = tmp_path / "projection.npz"
    proj.save(path)
    loaded = PosProjection.load(path)
    assert loaded.class_names == proj.class_names
    assert np.array_equal(loaded.membership, proj.membership)


def test_read_lexicon_tsv(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text("cat\tNN\nruns\tVBZ\nruns\tNNS\n\n", encoding="utf-8")
    lex = read_lexicon_tsv(path)
    assert lex == {"cat": {"NN"}, "runs": {"VBZ", "NNS"}}
    bad = tmp_path / "bad.tsv"
    bad.write_text("oops\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_lexicon_tsv(bad)


def test_lexicon_from_tagged_sentences_and_merge():
    lex = lexicon_from_tagged_sentences([(["the", "cat"], ["DT", "NN"]),
                                         (["cat", "runs"], ["NN", "VBZ"])])
    assert lex == {"the": {"DT"}, "cat": {"NN"}, "runs": {"VBZ"}}
    merged = merge_lexicons(lex, {"cat": {"VB"}})
    assert merged["cat"] == {"NN", "VB"}
