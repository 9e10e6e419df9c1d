"""Smoke test of the whole parsing pipeline against a live sidecar."""


def test_parse_pipeline_over_live_sidecar(live_server, tiny_model_dir, tmp_path):
    from dpndd.lsg import LabelConfig, LsgParser, PosConstraint
    from dpndd.molds import Mold, MoldRegistry
    from dpndd.pos import build_projection
    from dpndd.provider import DistributionProvider, HttpBackend
    from dpndd.subword import SubwordEncoder, WordPieceTokenizer
    from dpndd.treebank import Sentence

    tokenizer = WordPieceTokenizer.from_file(tiny_model_dir / "vocab.txt")
    encoder = SubwordEncoder(tokenizer)
    provider = DistributionProvider(HttpBackend(live_server))
    assert provider.vocab_size == tokenizer.vocab_size

    lexicon = {"the": {"DT"}, "a": {"DT"}, "cat": {"NN"}, "dog": {"NN"},
               "mat": {"NN"}, "bird": {"NN"}, "sat": {"VBD"}, "ran": {"VBD"},
               "sang": {"VBD"}, "on": {"IN"}, "fast": {"RB"}, ".": {"."}}
    projection = build_projection(lexicon, tokenizer.vocab)

    registry = MoldRegistry(
        [Mold(tokens=("the", "cat", "sat", "."), start=1, end=2, label="NP",
              utl=True),
         Mold(tokens=("a", "dog", "ran", "fast", "."), start=3, end=4, label="VP",
              utl=True)], encoder=encoder)
    constraints = {
        "NP": PosConstraint(label="NP", start=frozenset({"DT"}),
                            end=frozenset({"NN"}), left=None, right=None),
        "VP": PosConstraint(label="VP", start=frozenset({"VBD"}),
                            end=frozenset({"VBD", "RB", "NN"}), left=None,
                            right=None),
    }
    configs = {"NP": LabelConfig("NP", threshold=100.0, tolerance=0.1),
               "VP": LabelConfig("VP", threshold=100.0, tolerance=0.1)}
    parser = LsgParser(registry, provider, encoder, projection=projection,
                       constraints=constraints, configs=configs,
                       label_order=("NP", "VP"))
    sentence = Sentence(("the", "bird", "sang", "fast", "."),
                        ("DT", "NN", "VBD", "RB", "."))
    first = parser.parse(sentence)
    assert any(s.label == "NP" for s in first.spans)  # generous threshold
    second = parser.parse(sentence)
    assert first.span_tuples() == second.span_tuples()

    scores = []
    for tree in (first, second):
        for span in tree.spans:
            scores.append((span.start, span.end, span.label))
    assert scores[:len(first.spans)] == scores[len(first.spans):]
