"""PTB-style bracketed tree reading and writing, span extraction, WSJ-10.

Trees are flattened to (sentence, labeled spans) pairs: preterminals become
POS tags, internal nodes become 1-based inclusive spans.  Functional tags
and co-index suffixes are stripped from phrase labels; `-NONE-` traces are
removed with index re-compaction.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import MalformedBracket

PUNCTUATION_TAGS = frozenset({",", ".", ":", "``", "''", "-LRB-", "-RRB-"})
WSJ10_LABELS = frozenset({"NP", "VP", "ADJP", "ADVP", "PP"})
ROOT_LABEL = "TOP"


@dataclass(frozen=True)
class Span:
    start: int  # 1-based inclusive word positions
    end: int
    label: str

    def __iter__(self):
        return iter((self.start, self.end, self.label))


def spans_cross(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """True when the spans overlap without nesting (forbidden in a bracketing)."""
    (s, t), (s2, t2) = a, b
    return (s < s2 <= t < t2) or (s2 < s <= t2 < t)


@dataclass
class Sentence:
    words: tuple[str, ...]
    pos_tags: tuple[str, ...] = ()

    def __post_init__(self):
        self.words = tuple(self.words)
        self.pos_tags = tuple(self.pos_tags)
        if self.pos_tags and len(self.pos_tags) != len(self.words):
            raise ValueError("pos_tags length differs from words length")

    def __len__(self) -> int:
        return len(self.words)


@dataclass
class LabeledTree:
    """A sentence with its labeled constituent spans (possibly partial cover).

    The span list may hold the same (start, end) under several labels; the
    listing order of equal spans encodes nesting (outermost first).  Crossing
    spans are rejected.
    """

    sentence: Sentence
    spans: list[Span] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.sentence)
        for span in self.spans:
            if not 1 <= span.start <= span.end <= n:
                raise ValueError(f"span {span} out of range for {n} words")
        for i, a in enumerate(self.spans):
            for b in self.spans[i + 1:]:
                if spans_cross((a.start, a.end), (b.start, b.end)):
                    raise ValueError(f"crossing spans {a} and {b}")

    def span_tuples(self) -> list[tuple[int, int, str]]:
        return [(s.start, s.end, s.label) for s in self.spans]


def strip_label(label: str) -> str:
    """Drop functional tags, co-indices, and merge variants from a phrase label."""
    if label.startswith("-"):  # -NONE-, -LRB-, ... stay intact
        return label
    for sep in "-=|":
        idx = label.find(sep)
        if idx > 0:
            label = label[:idx]
    return label


class _Node:
    __slots__ = ("label", "children", "word")

    def __init__(self, label: str):
        self.label = label
        self.children: list[_Node] = []
        self.word: str | None = None


def _parse_node(text: str, pos: int) -> tuple[_Node, int]:
    if text[pos] != "(":
        raise MalformedBracket("expected '('", pos)
    pos += 1
    while pos < len(text) and text[pos].isspace():
        pos += 1
    start = pos
    while pos < len(text) and text[pos] not in "() \t\n\r":
        pos += 1
    node = _Node(text[start:pos])
    saw_child = False
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            raise MalformedBracket("unbalanced parentheses", pos)
        if text[pos] == ")":
            if not saw_child and node.word is None:
                raise MalformedBracket("empty node", pos)
            return node, pos + 1
        if text[pos] == "(":
            child, pos = _parse_node(text, pos)
            node.children.append(child)
            saw_child = True
        else:
            start = pos
            while pos < len(text) and text[pos] not in "() \t\n\r":
                pos += 1
            if node.word is not None or node.children:
                raise MalformedBracket("mixed leaf and internal content", start)
            node.word = text[start:pos]
            saw_child = True


def _prune_traces(node: _Node) -> _Node | None:
    if node.word is not None:
        return None if node.label == "-NONE-" else node
    node.children = [c for c in (_prune_traces(child) for child in node.children) if c]
    return node if node.children else None


def _collect(node: _Node, offset: int, words: list[str], tags: list[str],
             spans: list[Span | None]) -> int:
    if node.word is not None:
        words.append(node.word)
        tags.append(node.label)
        return offset + 1
    label = strip_label(node.label) if node.label else ROOT_LABEL
    placeholder = len(spans)  # reserve a slot so the list stays in pre-order
    spans.append(None)
    start = offset
    for child in node.children:
        offset = _collect(child, offset, words, tags, spans)
    spans[placeholder] = Span(start + 1, offset, label)
    return offset


def parse_bracket(text: str) -> LabeledTree:
    """Parse one bracketed tree into a sentence plus labeled spans."""
    pos = 0
    while pos < len(text) and text[pos].isspace():
        pos += 1
    if pos >= len(text) or text[pos] != "(":
        raise MalformedBracket("no tree found", pos)
    root, end = _parse_node(text, pos)
    while end < len(text) and text[end].isspace():
        end += 1
    if end != len(text):
        raise MalformedBracket("trailing content after tree", end)
    root = _prune_traces(root)
    if root is None:
        raise MalformedBracket("tree contains no words", pos)
    # unwrap a bare "( (S ...) )" shell so the wrapper does not add a span
    if not root.label and len(root.children) == 1 and root.children[0].word is None:
        root = root.children[0]
    words: list[str] = []
    tags: list[str] = []
    raw_spans: list[Span | None] = []
    if root.word is not None:
        return LabeledTree(Sentence((root.word,), (root.label,)), [])
    _collect(root, 0, words, tags, raw_spans)
    # DFS pre-order == (start asc, end desc) with outer spans first on ties
    spans: list[Span] = []
    seen: set[tuple[int, int, str]] = set()
    for span in raw_spans:
        key = (span.start, span.end, span.label)
        if key not in seen:
            seen.add(key)
            spans.append(span)
    return LabeledTree(Sentence(tuple(words), tuple(tags)), spans)


def emit_bracket(tree: LabeledTree) -> str:
    """Render a tree back to bracket text; uncovered words attach at the root."""
    n = len(tree.sentence)
    order = sorted(range(len(tree.spans)),
                   key=lambda i: (tree.spans[i].start, -tree.spans[i].end, i))
    spans = [tree.spans[i] for i in order]
    has_root = bool(spans) and spans[0].start == 1 and spans[0].end == n

    builders: list[tuple[Span, list]] = []  # (span, children) in pre-order
    stack: list[int] = []
    top_level: list = []
    for span in spans:
        while stack:
            parent = builders[stack[-1]][0]
            if parent.start <= span.start and span.end <= parent.end:
                break
            stack.pop()
        entry = (span, [])
        builders.append(entry)
        (builders[stack[-1]][1] if stack else top_level).append(entry)
        stack.append(len(builders) - 1)

    def leaf(w: int) -> str:
        tag = tree.sentence.pos_tags[w - 1] if tree.sentence.pos_tags else "XX"
        return f"({tag} {tree.sentence.words[w - 1]})"

    def render(entry, lo: int, hi: int) -> str:
        span, children = entry
        parts: list[str] = []
        w = span.start
        for child in children:
            cs, ce = child[0].start, child[0].end
            parts.extend(leaf(k) for k in range(w, cs))
            parts.append(render(child, cs, ce))
            w = ce + 1
        parts.extend(leaf(k) for k in range(w, span.end + 1))
        return f"({span.label} " + " ".join(parts) + ")"

    if has_root:
        return render(builders[0], 1, n)
    parts = []
    w = 1
    for entry in top_level:
        cs, ce = entry[0].start, entry[0].end
        parts.extend(leaf(k) for k in range(w, cs))
        parts.append(render(entry, cs, ce))
        w = ce + 1
    parts.extend(leaf(k) for k in range(w, n + 1))
    return f"({ROOT_LABEL} " + " ".join(parts) + ")"


def iter_bracket_blocks(text: str) -> Iterator[str]:
    """Yield balanced top-level (...) groups from a bracket stream."""
    depth = 0
    start = None
    for pos, char in enumerate(text):
        if char == "(":
            if depth == 0:
                start = pos
            depth += 1
        elif char == ")":
            depth -= 1
            if depth < 0:
                raise MalformedBracket("unbalanced ')'", pos)
            if depth == 0:
                yield text[start:pos + 1]
    if depth != 0:
        raise MalformedBracket("unbalanced '('", len(text))


def read_bracket_file(path: str | os.PathLike) -> list[LabeledTree]:
    with open(path, encoding="utf-8") as fh:
        return [parse_bracket(block) for block in iter_bracket_blocks(fh.read())]


def write_bracket_file(path: str | os.PathLike, trees: Iterable[LabeledTree]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tree in trees:
            fh.write(emit_bracket(tree) + "\n")


def tree_to_dict(tree: LabeledTree) -> dict:
    return {
        "words": list(tree.sentence.words),
        "pos": list(tree.sentence.pos_tags),
        "spans": [[s.start, s.end, s.label] for s in tree.spans],
    }


def tree_from_dict(data: dict) -> LabeledTree:
    return LabeledTree(
        Sentence(tuple(data["words"]), tuple(data.get("pos") or ())),
        [Span(int(s), int(t), str(label)) for s, t, label in data.get("spans", [])])


def read_json_file(path: str | os.PathLike) -> list[LabeledTree]:
    """Read span-list JSON: a top-level array, or one object per line."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read().strip()
    if not text:
        return []
    if text.startswith("["):
        return [tree_from_dict(obj) for obj in json.loads(text)]
    return [tree_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def write_json_file(path: str | os.PathLike, trees: Iterable[LabeledTree]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([tree_to_dict(t) for t in trees], fh, indent=1)
        fh.write("\n")


def read_treebank(path: str | os.PathLike) -> list[LabeledTree]:
    """Dispatch on extension: .json span lists, anything else bracket text."""
    if str(path).endswith(".json"):
        return read_json_file(path)
    return read_bracket_file(path)


def build_wsj10(treebanks: Iterable[LabeledTree], *, max_len: int = 10,
                labels: frozenset[str] = WSJ10_LABELS,
                count_punctuation: bool = True) -> list[LabeledTree]:
    """Length-filtered sub-corpus with spans restricted to the given labels.

    Sentences with fewer than `max_len` words survive (strictly under);
    with `count_punctuation=False`, punctuation words do not count toward
    the length test.
    """
    out: list[LabeledTree] = []
    for tree in treebanks:
        if count_punctuation:
            length = len(tree.sentence)
        else:
            length = sum(1 for tag in tree.sentence.pos_tags if tag not in PUNCTUATION_TAGS)
        if length >= max_len:
            continue
        kept = [s for s in tree.spans if s.label in labels]
        out.append(LabeledTree(tree.sentence, kept))
    return out


def read_conll_bio(path: str | os.PathLike, *, token_column: int = 0,
                   pos_column: int = 1, tag_column: int = -1) -> list[LabeledTree]:
    """Read CoNLL-03-style column data, turning BIO tags into labeled spans."""
    trees: list[LabeledTree] = []
    words: list[str] = []
    tags: list[str] = []
    bio: list[str] = []

    def flush():
        if not words:
            return
        spans: list[Span] = []
        start = None
        label = None
        for idx, mark in enumerate(bio + ["O"]):
            if start is not None and (mark.startswith(("O", "B")) or
                                      (mark.startswith("I") and mark[2:] != label)):
                spans.append(Span(start, idx, label))
                start, label = None, None
            if start is None and mark[0] in "BI" and len(mark) > 2:
                start, label = idx + 1, mark[2:]
        trees.append(LabeledTree(Sentence(tuple(words), tuple(tags)), spans))
        words.clear(); tags.clear(); bio.clear()

    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                flush()
                continue
            cols = line.split()
            if cols[token_column] == "-DOCSTART-":
                continue
            words.append(cols[token_column])
            tags.append(cols[pos_column] if len(cols) > max(pos_column, 1) else "XX")
            bio.append(cols[tag_column])
    flush()
    return trees
