"""Unsupervised full constituency parsing with masked-LM divergence molds.

The package measures the structural disturbance a span substitution causes
in a sentence (mean masked-distribution KL over the unedited positions,
optionally collapsed to POS classes) and uses label-specific reference
spans ("molds") to generate or label constituents.
"""

from .cache import DistributionCache, make_key
from .errors import (BackendUnavailable, ConfigError, DimensionMismatch, DpnddError,
                     EmptyLexicon, EmptyOverlap, EmptyTreebank, InsufficientSpans,
                     InvalidRange, MalformedBracket, NoMoldForLabel,
                     SentenceCountMismatch, SpanSetMismatch, VocabMismatch)
from .evaluation import (ConfusionMatrix, DisturbanceMatrix, EvalOptions, F1Report,
                         collect_spans_by_label, confusion_matrix, disturbance_matrix,
                         labeled_f1, unlabeled_f1)
from .lsg import (DEFAULT_LABEL_ORDER, LabelConfig, LsgParser, PosConstraint,
                  ScoredSpan, filter_spans, parse_sentence, remove_conflicts,
                  score_candidates, select_candidates)
from .molds import (EncodedMold, Mold, MoldRegistry, dp_ndd, from_mold_score,
                    load_default_molds, to_mold_score)
from .ndd import (Substitution, apply_substitution, kl_divergence, ndd,
                  overlap_alignment)
from .pos import PosProjection, build_projection, read_lexicon_tsv
from .provider import (DistributionProvider, HttpBackend, MaskQuery, MockBackend,
                       backend_from_url)
from .subword import (HashWordEncoder, SentenceEncoding, SubwordEncoder,
                      WordPieceTokenizer)
from .treebank import (LabeledTree, Sentence, Span, build_wsj10, emit_bracket,
                       parse_bracket, read_treebank, spans_cross)
from .utl import PosPrior, UtlLabeler, choose_label, estimate_priors

__version__ = "0.1.0"
