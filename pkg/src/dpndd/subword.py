"""Word-to-subword encoding and alignment.

Divergence pooling happens over subword positions, so every word-level span
is carried into subword space through the alignment produced here.  The
WordPiece implementation mirrors the standard BERT tokenizer: per-word
punctuation splitting followed by greedy longest-match-first pieces with
`##` continuations and an UNK fallback.
"""

from __future__ import annotations

import hashlib
import os
import unicodedata
from dataclasses import dataclass
from typing import Protocol, Sequence


@dataclass(frozen=True)
class SentenceEncoding:
    """Subword ids for one sentence plus the word -> subword alignment.

    `word_spans[w]` is the 1-based inclusive subword range of word w (0-based
    word index); `excluded` lists 1-based positions that are delimiter tokens
    and must never be pooled over or edited.
    """

    ids: tuple[int, ...]
    word_spans: tuple[tuple[int, int], ...]
    excluded: tuple[int, ...] = ()

    def span_for_words(self, s: int, t: int) -> tuple[int, int]:
        """Map a 1-based inclusive word span to its subword span."""
        if not 1 <= s <= t <= len(self.word_spans):
            raise ValueError(f"word span {s}..{t} out of range")
        return self.word_spans[s - 1][0], self.word_spans[t - 1][1]

    def ids_for_words(self, s: int, t: int) -> tuple[int, ...]:
        lo, hi = self.span_for_words(s, t)
        return self.ids[lo - 1:hi]

    def covers_all_content(self, lo: int, hi: int) -> bool:
        """True when the subword span covers every non-delimiter position."""
        excluded = set(self.excluded)
        content = [p for p in range(1, len(self.ids) + 1) if p not in excluded]
        return bool(content) and lo <= content[0] and content[-1] <= hi


class Encoder(Protocol):
    vocab_size: int

    def encode(self, words: Sequence[str]) -> SentenceEncoding: ...


def _is_punctuation(char: str) -> bool:
    cp = ord(char)
    if (33 <= cp <= 47) or (58 <= cp <= 64) or (91 <= cp <= 96) or (123 <= cp <= 126):
        return True
    return unicodedata.category(char).startswith("P")


def split_on_punctuation(word: str) -> list[str]:
    """Split a word into runs of non-punctuation and single punctuation chars."""
    chunks: list[str] = []
    current: list[str] = []
    for char in word:
        if _is_punctuation(char):
            if current:
                chunks.append("".join(current))
                current = []
            chunks.append(char)
        else:
            current.append(char)
    if current:
        chunks.append("".join(current))
    return chunks or [word]


class WordPieceTokenizer:
    """Greedy longest-match-first WordPiece over a fixed vocabulary file."""

    def __init__(self, vocab: Sequence[str], *, unk_token: str = "[UNK]",
                 max_word_chars: int = 100):
        self.vocab = list(vocab)
        self.token_to_id = {tok: i for i, tok in enumerate(self.vocab)}
        if unk_token not in self.token_to_id:
            raise ValueError(f"vocabulary lacks the unknown token {unk_token!r}")
        self.unk_token = unk_token
        self.max_word_chars = max_word_chars

    @classmethod
    def from_file(cls, path: str | os.PathLike, **kwargs) -> "WordPieceTokenizer":
        with open(path, encoding="utf-8") as fh:
            vocab = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        return cls(vocab, **kwargs)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def pieces(self, word: str) -> list[str]:
        out: list[str] = []
        for chunk in split_on_punctuation(word):
            out.extend(self._wordpiece(chunk))
        return out

    def _wordpiece(self, chunk: str) -> list[str]:
        if len(chunk) > self.max_word_chars:
            return [self.unk_token]
        pieces: list[str] = []
        start = 0
        while start < len(chunk):
            end = len(chunk)
            piece = None
            while start < end:
                candidate = chunk[start:end]
                if start > 0:
                    candidate = "##" + candidate
                if candidate in self.token_to_id:
                    piece = candidate
                    break
                end -= 1
            if piece is None:
                return [self.unk_token]
            pieces.append(piece)
            start = end
        return pieces

    def encode_word(self, word: str) -> list[int]:
        return [self.token_to_id[p] for p in self.pieces(word)]


class SubwordEncoder:
    """Encode word sequences with a WordPiece vocabulary and delimiter tokens."""

    def __init__(self, tokenizer: WordPieceTokenizer, *, add_delimiters: bool = True,
                 bos_token: str = "[CLS]", eos_token: str = "[SEP]"):
        self.tokenizer = tokenizer
        self.add_delimiters = add_delimiters
        if add_delimiters:
            self.bos_id = tokenizer.token_to_id[bos_token]
            self.eos_id = tokenizer.token_to_id[eos_token]

    @property
    def vocab_size(self) -> int:
        return self.tokenizer.vocab_size

    def encode(self, words: Sequence[str]) -> SentenceEncoding:
        ids: list[int] = []
        spans: list[tuple[int, int]] = []
        excluded: list[int] = []
        if self.add_delimiters:
            ids.append(self.bos_id)
            excluded.append(1)
        for word in words:
            piece_ids = self.tokenizer.encode_word(word)
            lo = len(ids) + 1
            ids.extend(piece_ids)
            spans.append((lo, len(ids)))
        if self.add_delimiters:
            ids.append(self.eos_id)
            excluded.append(len(ids))
        return SentenceEncoding(ids=tuple(ids), word_spans=tuple(spans),
                                excluded=tuple(excluded))


class HashWordEncoder:
    """Word-level encoder for mock backends: one stable id per surface form."""

    def __init__(self, vocab_size: int = 64, *, seed: int = 0):
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        self.vocab_size = vocab_size
        self.seed = seed

    def word_id(self, word: str) -> int:
        digest = hashlib.sha256(f"{self.seed}|{word}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little") % self.vocab_size

    def encode(self, words: Sequence[str]) -> SentenceEncoding:
        ids = tuple(self.word_id(w) for w in words)
        spans = tuple((k, k) for k in range(1, len(words) + 1))
        return SentenceEncoding(ids=ids, word_spans=spans, excluded=())
