import numpy as np
import pytest

from dpndd.errors import ConfigError
from dpndd.lsg import (LabelConfig, LsgParser, PosConstraint, ScoredSpan,
                       filter_spans, load_default_configs, load_default_constraints,
                       parse_sentence, remove_conflicts, score_candidates,
                       select_candidates)
from dpndd.molds import Mold, MoldRegistry, dp_ndd
from dpndd.subword import HashWordEncoder
from dpndd.treebank import Sentence, spans_cross

ANY = PosConstraint(label="X", start=None, end=None, left=None, right=None)


def constraint(**kwargs) -> PosConstraint:
    base = dict(label="X", start=None, end=None, left=None, right=None, max_len=None)
    base.update(kwargs)
    return PosConstraint(**base)


def sent(tags: list[str]) -> Sentence:
    return Sentence(tuple(f"w{i}" for i in range(len(tags))), tuple(tags))


class TestSelectCandidates:
    def test_no_token_matches(self):
        sentence = sent(["DT", "NN", "VBZ"])
        assert select_candidates(sentence, constraint(start={"RP"})) == []

    def test_prt_style_constraint(self):
        # ... stay in the market ... with "in" tagged RP
        sentence = Sentence(("investors", "stay", "in", "the", "market"),
                            ("NNS", "VB", "RP", "DT", "NN"))
        prt = constraint(start={"RP"}, end={"RP"}, max_len=1)
        assert select_candidates(sentence, prt) == [(3, 3)]

    def test_exhaustive_enumeration_with_max_len(self):
        sentence = sent(["A", "B", "C", "D"])
        got = select_candidates(sentence, constraint(max_len=2))
        want = [(s, t) for s in range(1, 5) for t in range(s, 5) if t - s + 1 <= 2]
        assert got == want
        assert len(got) == 7

    def test_whole_sentence_span_excluded(self):
        sentence = sent(["A", "B"])
        got = select_candidates(sentence, constraint())
        assert (1, 2) not in got
        assert got == [(1, 1), (2, 2)]

    def test_boundary_sentinels(self):
        sentence = sent(["DT", "NN"])
        first_only = constraint(left={"SOS"})
        got = select_candidates(sentence, first_only)
        assert all(s == 1 for s, _ in got)
        last_only = constraint(right={"EOS"})
        got = select_candidates(sentence, last_only)
        assert got == [(2, 2)]  # (1,2) would match EOS but is the root span

    def test_neighbor_tags(self):
        sentence = sent(["IN", "DT", "NN", "VBZ"])
        c = constraint(start={"DT"}, end={"NN"}, left={"IN"}, right={"VBZ"})
        assert select_candidates(sentence, c) == [(2, 3)]

    def test_requires_pos_tags(self):
        with pytest.raises(ValueError):
            select_candidates(Sentence(("a", "b")), ANY)


class TestScoreCandidates:
    def test_empty(self, mock_provider):
        encoder = HashWordEncoder(16, seed=7)
        registry = MoldRegistry([Mold(tokens=("a", "b", "c"), start=2, end=2,
                                      label="NP")], encoder=encoder)
        encoding = encoder.encode(["x", "y", "z"])
        assert score_candidates([], "NP", encoding, registry, mock_provider) == []

    def test_matches_direct_dp_ndd(self, mock_provider):
        encoder = HashWordEncoder(16, seed=7)
        registry = MoldRegistry([Mold(tokens=("a", "b", "c"), start=2, end=2,
                                      label="NP")], encoder=encoder)
        encoding = encoder.encode(["x", "y", "z"])
        candidates = [(1, 1), (2, 3)]
        scored = score_candidates(candidates, "NP", encoding, registry, mock_provider)
        assert [s.bounds for s in scored] == candidates  # order preserved
        for span in scored:
            want = dp_ndd("NP", encoding, span.start, span.end, registry, mock_provider)
            assert span.score == want

    def test_mold_identical_candidate_scores_zero(self, mock_provider):
        encoder = HashWordEncoder(16, seed=7)
        registry = MoldRegistry([Mold(tokens=("a", "b", "c"), start=2, end=2,
                                      label="NP")], encoder=encoder)
        encoding = encoder.encode(["x", "b", "z"])
        scored = score_candidates([(2, 2), (1, 1)], "NP", encoding, registry,
                                  mock_provider)
        assert scored[0].score == 0.0
        best = min(scored, key=lambda s: s.score)
        assert best.bounds == (2, 2)


class TestRemoveConflicts:
    def test_empty_accepted(self):
        spans = [ScoredSpan(1, 2, "NP", 0.5)]
        assert remove_conflicts(spans, []) == spans

    def test_crossing_removed(self):
        accepted = [ScoredSpan(1, 5, "NP", 0.1)]
        assert remove_conflicts([ScoredSpan(3, 7, "VP", 0.2)], accepted) == []

    def test_nested_kept(self):
        accepted = [ScoredSpan(1, 5, "NP", 0.1)]
        nested = [ScoredSpan(2, 4, "VP", 0.2)]
        assert remove_conflicts(nested, accepted) == nested

    def test_shrinking_accepted_only_grows_survivors(self):
        rng = np.random.default_rng(1)
        spans = [ScoredSpan(int(s), int(s + w), "X", float(rng.random()))
                 for s, w in zip(rng.integers(1, 10, 40), rng.integers(0, 5, 40))]
        accepted = [ScoredSpan(2, 6, "A", 0.1), ScoredSpan(8, 11, "B", 0.1)]
        smaller = accepted[:1]
        all_survivors = {s.bounds for s in remove_conflicts(spans, accepted)}
        more_survivors = {s.bounds for s in remove_conflicts(spans, smaller)}
        assert all_survivors <= more_survivors


class TestFilterSpans:
    CONFIG = LabelConfig("X", threshold=1.0, tolerance=0.10)

    def test_all_above_threshold(self):
        spans = [ScoredSpan(1, 2, "X", 1.0), ScoredSpan(2, 3, "X", 5.0)]
        assert filter_spans(spans, self.CONFIG) == []

    def test_nested_within_tolerance_kept(self):
        spans = [ScoredSpan(1, 5, "X", 0.50), ScoredSpan(2, 4, "X", 0.58)]
        kept = filter_spans(spans, self.CONFIG)
        assert {s.bounds for s in kept} == {(1, 5), (2, 4)}

    def test_nested_beyond_tolerance_keeps_better(self):
        spans = [ScoredSpan(1, 5, "X", 0.50), ScoredSpan(2, 4, "X", 0.70)]
        kept = filter_spans(spans, self.CONFIG)
        assert [s.bounds for s in kept] == [(1, 5)]

    def test_crossing_keeps_lower_score(self):
        spans = [ScoredSpan(1, 4, "X", 0.4), ScoredSpan(3, 6, "X", 0.3)]
        kept = filter_spans(spans, self.CONFIG)
        assert [s.bounds for s in kept] == [(3, 6)]

    def test_crossing_keep_higher_switch(self):
        spans = [ScoredSpan(1, 4, "X", 0.4), ScoredSpan(3, 6, "X", 0.3)]
        kept = filter_spans(spans, self.CONFIG, overlap_keep="higher")
        assert [s.bounds for s in kept] == [(1, 4)]
        with pytest.raises(ConfigError):
            filter_spans(spans, self.CONFIG, overlap_keep="middle")

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        spans = []
        for _ in range(60):
            s = int(rng.integers(1, 12))
            t = s + int(rng.integers(0, 6))
            spans.append(ScoredSpan(s, t, "X", float(rng.random() * 2)))
        once = filter_spans(spans, self.CONFIG)
        twice = filter_spans(once, self.CONFIG)
        assert once == twice


class TestParseSentence:
    CONFIGS = {
        "NP": LabelConfig("NP", threshold=1.0, tolerance=0.0),
        "VP": LabelConfig("VP", threshold=1.0, tolerance=0.0),
    }
    CONSTRAINTS = {
        "NP": constraint(label="NP"),
        "VP": constraint(label="VP"),
    }

    def test_no_matching_constraints(self):
        sentence = sent(["A"] * 4)
        constraints = {"NP": constraint(label="NP", start={"ZZ"}),
                       "VP": constraint(label="VP", start={"ZZ"})}
        out = parse_sentence(sentence, constraints, self.CONFIGS, ("NP", "VP"),
                             lambda *a: 0.0)
        assert out == []

    def test_crossing_vp_removed_by_earlier_np(self):
        sentence = sent(["A"] * 6)

        def score(label, _sentence, s, t):
            if label == "NP":
                return 0.1 if (s, t) == (1, 4) else 10.0
            return 0.1 if (s, t) == (3, 6) else 10.0

        out = parse_sentence(sentence, self.CONSTRAINTS, self.CONFIGS, ("NP", "VP"),
                             score)
        assert [(s.start, s.end, s.label) for s in out] == [(1, 4, "NP")]

    def test_single_label_equals_standalone_steps(self):
        sentence = sent(["A"] * 5)
        rng = np.random.default_rng(11)
        scores = {}

        def score(label, _sentence, s, t):
            return scores.setdefault((label, s, t), float(rng.random() * 2))

        out = parse_sentence(sentence, self.CONSTRAINTS, self.CONFIGS, ("NP",), score)
        candidates = select_candidates(sentence, self.CONSTRAINTS["NP"])
        scored = [ScoredSpan(s, t, "NP", score("NP", sentence, s, t))
                  for s, t in candidates]
        scored = remove_conflicts(scored, [])
        want = filter_spans(scored, self.CONFIGS["NP"])
        assert out == want

    def test_missing_label_setup(self):
        sentence = sent(["A"] * 3)
        with pytest.raises(ConfigError):
            parse_sentence(sentence, self.CONSTRAINTS, self.CONFIGS, ("QP",),
                           lambda *a: 0.0)

    def test_no_crossing_under_random_scores(self):
        rng = np.random.default_rng(42)
        configs = {l: LabelConfig(l, threshold=1.5, tolerance=float(rng.random() * 0.3))
                   for l in ("NP", "VP", "PP")}
        constraints = {l: constraint(label=l) for l in configs}
        for _ in range(200):
            n = int(rng.integers(2, 12))
            sentence = sent(["A"] * n)

            def score(label, _sentence, s, t):
                return float(rng.random() * 3)

            out = parse_sentence(sentence, constraints, configs,
                                 ("NP", "VP", "PP"), score)
            bounds = [s.bounds for s in out]
            for i, a in enumerate(bounds):
                for b in bounds[i + 1:]:
                    assert not spans_cross(a, b), (a, b)
            for span in out:
                assert span.score < configs[span.label].threshold

    def test_earlier_labels_unaffected_by_deleting_later_label(self):
        rng = np.random.default_rng(17)
        configs = {l: LabelConfig(l, threshold=1.2, tolerance=0.1)
                   for l in ("NP", "VP", "PP")}
        constraints = {l: constraint(label=l) for l in configs}
        for _ in range(20):
            n = int(rng.integers(2, 9))
            sentence = sent(["A"] * n)
            table = {}

            def score(label, _sentence, s, t):
                return table.setdefault((label, s, t), float(rng.random() * 2))

            full = parse_sentence(sentence, constraints, configs,
                                  ("NP", "VP", "PP"), score)
            reduced = parse_sentence(sentence, constraints, configs,
                                     ("NP", "PP"), score)
            np_full = [s for s in full if s.label == "NP"]
            np_reduced = [s for s in reduced if s.label == "NP"]
            assert np_full == np_reduced  # NP runs before VP either way


class TestShippedConfigs:
    def test_constraints_cover_all_labels(self):
        constraints = load_default_constraints()
        assert set(constraints) == {"NP", "VP", "ADJP", "ADVP", "PP", "QP", "SBAR",
                                    "S", "WHNP", "WHADVP", "PRN", "PRT"}
        assert constraints["PRT"].max_len == 1
        assert constraints["ADVP"].max_len == 5
        assert "SOS" in constraints["NP"].left
        assert "EOS" in constraints["NP"].right
        assert constraints["WHADVP"].left is None

    def test_profiles(self):
        tight = load_default_configs("tight")
        loose = load_default_configs("loose")
        assert tight["VP"].threshold == 0.8 and tight["VP"].tolerance == 0.15
        assert loose["VP"].threshold == 2.0 and loose["VP"].tolerance == 0.05
        assert tight["NP"].threshold == 2.0 and loose["NP"].threshold == 1.4
        assert tight["SBAR"].tolerance == 0.01
        with pytest.raises(ConfigError):
            load_default_configs("medium")


def test_lsg_parser_end_to_end(mock_provider):
    encoder = HashWordEncoder(16, seed=7)
    registry = MoldRegistry(
        [Mold(tokens=("the", "cat", "sat", "."), start=1, end=2, label="NP",
              utl=True)], encoder=encoder)
    constraints = {"NP": constraint(label="NP", start={"DT"}, end={"NN"})}
    configs = {"NP": LabelConfig("NP", threshold=50.0, tolerance=0.0)}
    parser = LsgParser(registry, mock_provider, encoder, constraints=constraints,
                       configs=configs, label_order=("NP",))
    tree = parser.parse(Sentence(("the", "dog", "runs"), ("DT", "NN", "VBZ")))
    assert tree.span_tuples() == [(1, 2, "NP")]
    trees = parser.parse_many([Sentence(("the", "dog", "runs"),
                                        ("DT", "NN", "VBZ"))] * 3, workers=2)
    assert all(t.span_tuples() == [(1, 2, "NP")] for t in trees)
