"""Word-to-POS projection collapsing vocabulary distributions into POS classes.

The projection is a binary membership matrix with one row per POS class plus
a reserved OTHER row that catches vocabulary entries matching no class
(subword continuation pieces, special tokens, out-of-lexicon words), so the
projected vector always accounts for the full probability mass.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatch, EmptyLexicon

OTHER_CLASS = "OTHER"

_SPECIAL_MARKERS = ("[", "<")


def _is_special(entry: str) -> bool:
    return entry.startswith(_SPECIAL_MARKERS) or entry.startswith("##")


@dataclass(frozen=True)
class PosProjection:
    """Binary membership of vocabulary entries in POS classes.

    `class_names` lists the POS classes in row order with OTHER last;
    `membership` has shape (len(class_names), vocab_size) with 0/1 entries.
    """

    class_names: tuple[str, ...]
    membership: np.ndarray

    def __post_init__(self):
        if self.class_names[-1] != OTHER_CLASS:
            raise ValueError("last class must be OTHER")
        if self.membership.shape[0] != len(self.class_names):
            raise ValueError("membership row count != number of classes")

    @property
    def vocab_size(self) -> int:
        return self.membership.shape[1]

    def project_raw(self, d: np.ndarray) -> np.ndarray:
        """Sum vocabulary mass per class without renormalizing."""
        d = np.asarray(d, dtype=np.float64)
        if d.shape != (self.vocab_size,):
            raise DimensionMismatch(
                f"distribution length {d.shape} != vocabulary size {self.vocab_size}")
        return self.membership @ d

    def project(self, d: np.ndarray) -> np.ndarray:
        """Project to a POS-class probability vector (renormalized to sum 1).

        A word may belong to several classes, so the raw class masses can sum
        above the input's total mass; renormalizing keeps the result a proper
        distribution for the KL step while preserving the argmax structure.
        """
        q = self.project_raw(d)
        total = q.sum()
        if total <= 0:
            raise ValueError("projected distribution has no mass")
        return q / total

    def save(self, path: str | os.PathLike) -> None:
        np.savez_compressed(
            path, version=np.int64(1),
            class_names=np.array(self.class_names, dtype=object),
            membership=self.membership.astype(np.uint8))

    @classmethod
    def load(cls, path: str | os.PathLike) -> "PosProjection":
        with np.load(path, allow_pickle=True) as data:
            version = int(data["version"])
            if version != 1:
                raise ValueError(f"unsupported projection version {version}")
            return cls(
                class_names=tuple(str(n) for n in data["class_names"]),
                membership=data["membership"].astype(np.float64))


def build_projection(lexicon: Mapping[str, Iterable[str]], vocab: list[str]) -> PosProjection:
    """Construct the projection matrix from a word->POS lexicon.

    A vocabulary entry gets a 1 in every class the lexicon lists it under
    (looked up by exact surface form, then lowercased); entries matching no
    class, continuation pieces, and special tokens fall into OTHER.
    """
    if not lexicon:
        raise EmptyLexicon("lexicon has no entries")
    classes = sorted({pos for tags in lexicon.values() for pos in tags})
    if not classes:
        raise EmptyLexicon("lexicon lists no POS classes")
    class_index = {name: row for row, name in enumerate(classes)}
    membership = np.zeros((len(classes) + 1, len(vocab)), dtype=np.float64)
    other_row = len(classes)
    for col, entry in enumerate(vocab):
        tags: set[str] = set()
        if not _is_special(entry):
            tags = set(lexicon.get(entry) or lexicon.get(entry.lower()) or ())
        if tags:
            for pos in tags:
                membership[class_index[pos], col] = 1.0
        else:
            membership[other_row, col] = 1.0
    return PosProjection(class_names=tuple(classes) + (OTHER_CLASS,), membership=membership)


def read_lexicon_tsv(path: str | os.PathLike) -> dict[str, set[str]]:
    """Read a `word<TAB>POS` lexicon file; repeated words accumulate classes."""
    lexicon: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}:{lineno}: expected 'word<TAB>POS', got {line!r}")
            lexicon.setdefault(parts[0], set()).add(parts[1])
    return lexicon


def lexicon_from_tagged_sentences(sentences: Iterable[tuple[list[str], list[str]]]) -> dict[str, set[str]]:
    """Collect a word->POS lexicon from (words, pos_tags) pairs, e.g. dev data."""
    lexicon: dict[str, set[str]] = {}
    for words, tags in sentences:
        for word, tag in zip(words, tags):
            lexicon.setdefault(word, set()).add(tag)
    return lexicon


def merge_lexicons(*lexicons: Mapping[str, Iterable[str]]) -> dict[str, set[str]]:
    merged: dict[str, set[str]] = {}
    for lex in lexicons:
        for word, tags in lex.items():
            merged.setdefault(word, set()).update(tags)
    return merged
