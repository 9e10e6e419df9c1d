"""Command-line surface: parse, label, eval, disturb, cache.

Results go to stdout (or --out); progress and diagnostics go to stderr.
Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import evaluation, treebank
from .cache import DistributionCache
from .errors import ConfigError, DpnddError
from .lsg import (DEFAULT_LABEL_ORDER, LsgParser, load_default_configs,
                  load_default_constraints, read_constraints, read_label_configs)
from .molds import MoldRegistry, load_default_molds
from .pos import PosProjection, build_projection, read_lexicon_tsv
from .provider import DistributionProvider, MockBackend, backend_from_url
from .subword import HashWordEncoder, SubwordEncoder, WordPieceTokenizer
from .utl import UtlLabeler, estimate_priors

log = logging.getLogger("dpndd")


def _require_file(path: str | None, what: str) -> str | None:
    if path is not None and not os.path.exists(path):
        raise ConfigError(f"{what} file not found: {path}")
    return path


def _build_backend(args):
    if args.endpoint:
        return backend_from_url(args.endpoint)
    return None


def _build_provider(args):
    backend = _build_backend(args)
    cache = None
    if args.cache:
        if backend is not None:
            cache = DistributionCache(args.cache, backend_id=backend.backend_id,
                                      vocab_size=backend.vocab_size)
        else:
            _require_file(args.cache, "cache")
            cache = DistributionCache(args.cache, create=False)
    if backend is None and cache is None:
        raise ConfigError("need --endpoint and/or --cache")
    return DistributionProvider(backend, cache), backend


def _build_encoder(args, provider, backend):
    if args.vocab:
        _require_file(args.vocab, "vocabulary")
        tokenizer = WordPieceTokenizer.from_file(args.vocab)
        if tokenizer.vocab_size != provider.vocab_size:
            raise ConfigError(
                f"vocabulary file has {tokenizer.vocab_size} entries, backend reports "
                f"{provider.vocab_size}")
        return SubwordEncoder(tokenizer)
    if isinstance(backend, MockBackend):
        return HashWordEncoder(backend.vocab_size, seed=backend.seed)
    if backend is None and provider.backend_id.startswith("mock-"):
        seed = int(provider.backend_id.rsplit("-s", 1)[1].split("-")[0])
        return HashWordEncoder(provider.vocab_size, seed=seed)
    raise ConfigError("a real-model backend requires --vocab (the model's vocab file)")


def _build_projection(args, encoder) -> PosProjection | None:
    if args.metric == "ndd":
        return None
    if not args.lexicon:
        raise ConfigError("--metric pos-ndd requires --lexicon (word<TAB>POS file)")
    _require_file(args.lexicon, "lexicon")
    lexicon = read_lexicon_tsv(args.lexicon)
    if isinstance(encoder, SubwordEncoder):
        return build_projection(lexicon, encoder.tokenizer.vocab)
    return _hashed_projection(lexicon, encoder)


def _hashed_projection(lexicon, encoder: HashWordEncoder) -> PosProjection:
    """Projection over a hashed word vocabulary (mock backends only)."""
    from .pos import OTHER_CLASS

    classes = sorted({pos for tags in lexicon.values() for pos in tags})
    membership = np.zeros((len(classes) + 1, encoder.vocab_size))
    index = {name: row for row, name in enumerate(classes)}
    for word, tags in lexicon.items():
        for pos in tags:
            membership[index[pos], encoder.word_id(word)] = 1.0
    membership[len(classes)] = (membership[:len(classes)].sum(axis=0) == 0).astype(float)
    return PosProjection(tuple(classes) + (OTHER_CLASS,), membership)


def _build_registry(args, encoder) -> MoldRegistry:
    if args.molds:
        _require_file(args.molds, "molds")
        return MoldRegistry.from_file(args.molds, encoder=encoder)
    return MoldRegistry(load_default_molds(), encoder=encoder)


def _label_order(args) -> tuple[str, ...]:
    if args.label_order:
        return tuple(args.label_order.split(","))
    return DEFAULT_LABEL_ORDER


def _read_input(path: str):
    _require_file(path, "input")
    return treebank.read_treebank(path)


def _emit_trees(trees, args) -> None:
    text = "".join(treebank.emit_bracket(t) + "\n" for t in trees)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if getattr(args, "json_out", None):
        treebank.write_json_file(args.json_out, trees)


def cmd_parse(args) -> int:
    provider, backend = _build_provider(args)
    encoder = _build_encoder(args, provider, backend)
    projection = _build_projection(args, encoder)
    registry = _build_registry(args, encoder)
    if args.config:
        _require_file(args.config, "config")
        configs = read_label_configs(args.config)
    else:
        configs = load_default_configs(args.profile)
    if args.constraints:
        _require_file(args.constraints, "constraints")
        constraints = read_constraints(args.constraints)
    else:
        constraints = load_default_constraints()
    parser = LsgParser(registry, provider, encoder, projection=projection,
                       constraints=constraints, configs=configs,
                       label_order=_label_order(args), overlap_keep=args.overlap_keep)
    trees = _read_input(args.input)
    log.info("parsing %d sentences", len(trees))
    parsed = parser.parse_many((t.sentence for t in trees), workers=args.workers)
    _emit_trees(parsed, args)
    log.info("cache: %d hits, %d misses", provider.cache.hits, provider.cache.misses)
    return 0


def cmd_label(args) -> int:
    provider, backend = _build_provider(args)
    encoder = _build_encoder(args, provider, backend)
    projection = _build_projection(args, encoder)
    registry = _build_registry(args, encoder)
    priors = None
    if args.pos_refine:
        if not args.priors_from:
            raise ConfigError("--pos-refine requires --priors-from (tagged treebank)")
        _require_file(args.priors_from, "priors treebank")
        dev = treebank.read_treebank(args.priors_from)
        priors = estimate_priors(dev, args.labels.split(",") if args.labels
                                 else registry.labels)
    labeler = UtlLabeler(registry, provider, encoder, projection=projection,
                         labels=args.labels.split(",") if args.labels else None,
                         priors=priors, utl_molds_only=not args.all_molds)
    trees = _read_input(args.input)
    log.info("labeling %d sentences", len(trees))
    labeled = labeler.label_treebank(trees, workers=args.workers)
    _emit_trees(labeled, args)
    return 0


def cmd_eval(args) -> int:
    predicted = _read_input(args.pred)
    gold = _read_input(args.gold)
    options = evaluation.EvalOptions(
        exclude_trivial=not args.keep_trivial_spans,
        strip_punctuation=args.strip_punct,
        collapse_duplicates=not args.keep_duplicates)
    unlabeled = evaluation.unlabeled_f1(predicted, gold, options)
    labeled = evaluation.labeled_f1(predicted, gold, options)
    if args.json:
        result = {"unlabeled": unlabeled.to_dict(), "labeled": labeled.to_dict()}
        if args.confusion:
            cm = evaluation.confusion_matrix(predicted, gold)
            result["confusion"] = {"labels": list(cm.labels),
                                   "counts": cm.counts.tolist()}
        print(json.dumps(result, indent=1))
    else:
        print(f"unlabeled F1 {100 * unlabeled.f1:.1f} "
              f"(P {100 * unlabeled.precision:.1f} R {100 * unlabeled.recall:.1f})")
        print(f"labeled   F1 {100 * labeled.f1:.1f} "
              f"(P {100 * labeled.precision:.1f} R {100 * labeled.recall:.1f})")
        print("\nlabeled per-label:")
        print(labeled.format_table())
        if args.confusion:
            print(evaluation.confusion_matrix(predicted, gold).to_csv())
    return 0


def cmd_disturb(args) -> int:
    provider, backend = _build_provider(args)
    encoder = _build_encoder(args, provider, backend)
    projection = _build_projection(args, encoder)
    if args.conll:
        trees = treebank.read_conll_bio(args.input)
    else:
        trees = _read_input(args.input)
    labels = args.labels.split(",") if args.labels else None
    pools = evaluation.collect_spans_by_label(trees, labels)
    matrix = evaluation.disturbance_matrix(
        pools, provider, encoder, sample_size=args.sample_size,
        metric=args.metric, projection=projection, seed=args.seed)
    csv = matrix.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    return 0


def cmd_cache(args) -> int:
    provider, backend = _build_provider(args)
    if backend is None:
        raise ConfigError("cache prefetch needs --endpoint")
    if args.cache is None:
        raise ConfigError("cache prefetch needs --cache (output path)")
    encoder = _build_encoder(args, provider, backend)
    trees = _read_input(args.input)
    from .provider import MaskQuery

    queries = []
    for tree in trees:
        encoding = encoder.encode(list(tree.sentence.words))
        excluded = set(encoding.excluded)
        for k in range(1, len(encoding.ids) + 1):
            if k not in excluded:
                queries.append(MaskQuery(tokens=encoding.ids, masked_index=k - 1))
    log.info("prefetching %d masked queries", len(queries))
    provider.get_distributions_batch(queries)
    print(f"cached {len(provider.cache)} distributions in {args.cache}")
    return 0


def _add_backend_flags(sub) -> None:
    sub.add_argument("--endpoint", help="inference service URL, or mock://<vocab>?seed=N")
    sub.add_argument("--cache", help="distribution cache file")
    sub.add_argument("--vocab", help="model vocabulary file (one token per line)")
    sub.add_argument("--lexicon", help="word<TAB>POS lexicon for the POS projection")
    sub.add_argument("--metric", choices=("ndd", "pos-ndd"), default="pos-ndd")
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument("--seed", type=int, default=0)


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpndd",
                                     description="Mold-based constituency parsing "
                                                 "with masked-LM divergence")
    parser.add_argument("--verbose", "-v", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("parse", help="labeled span generating over sentences")
    p.add_argument("--input", required=True, help="POS-tagged treebank (bracket or JSON)")
    p.add_argument("--out", help="bracket output file (default stdout)")
    p.add_argument("--json-out", help="also write spans as JSON")
    p.add_argument("--molds", help="mold JSON file (default: shipped set)")
    p.add_argument("--constraints", help="POS constraint JSON (default: shipped set)")
    p.add_argument("--config", help="threshold/tolerance JSON (overrides --profile)")
    p.add_argument("--profile", choices=("tight", "loose"), default="tight")
    p.add_argument("--label-order", help="comma-separated label processing order")
    p.add_argument("--overlap-keep", choices=("lower", "higher"), default="lower")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_parse)

    p = commands.add_parser("label", help="label the spans of an unlabeled treebank")
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="bracket output file (default stdout)")
    p.add_argument("--json-out", help="also write spans as JSON")
    p.add_argument("--molds")
    p.add_argument("--labels", help="comma-separated label set (default: registry labels)")
    p.add_argument("--pos-refine", action="store_true",
                   help="weight scores by POS-conditioned label priors")
    p.add_argument("--priors-from", help="labeled tagged treebank for prior estimation")
    p.add_argument("--all-molds", action="store_true",
                   help="use every mold per label instead of the labeling subset")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_label)

    p = commands.add_parser("eval", help="bracket F1 against a gold treebank")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--confusion", action="store_true",
                   help="also print the label confusion matrix (identical span sets)")
    p.add_argument("--keep-trivial-spans", action="store_true")
    p.add_argument("--strip-punct", action="store_true")
    p.add_argument("--keep-duplicates", action="store_true",
                   help="multiset semantics for unlabeled matching")
    p.set_defaults(func=cmd_eval)

    p = commands.add_parser("disturb", help="label-pair substitution disturbance matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--conll", action="store_true", help="input is CoNLL BIO columns")
    p.add_argument("--labels", help="comma-separated labels to include")
    p.add_argument("--sample-size", type=int, default=2000)
    p.add_argument("--out", help="CSV output file (default stdout)")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_disturb)

    p = commands.add_parser("cache", help="prefetch masked-query distributions")
    p.add_argument("--input", required=True, help="treebank of sentences to prefetch")
    _add_backend_flags(p)
    p.set_defaults(func=cmd_cache)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
                        level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", force=True)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    except DpnddError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
