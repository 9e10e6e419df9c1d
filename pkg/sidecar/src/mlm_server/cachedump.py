"""Offline cache dumping in the record format the parsing side reads.

File layout (little-endian): header = b"NDDC" | u16 version=1 | u32
vocab_size | u16 backend id length | backend id bytes; each record = 32-byte
sha256 key | u32 float count | float32 values | crc32 of the preceding
record bytes.  The key is the sha256 of the canonical JSON object
{"backend":..., "masked_index":..., "tokens":[...]} with sorted keys and no
whitespace — the same derivation the consumer uses, so dumped files are
read back bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from typing import Iterable, Sequence, TextIO

import numpy as np

from .model import MaskedLmModel

MAGIC = b"NDDC"
VERSION = 1


def query_key(backend_id: str, tokens: Sequence[int], masked_index: int) -> bytes:
    payload = json.dumps(
        {"backend": backend_id, "masked_index": int(masked_index),
         "tokens": [int(t) for t in tokens]},
        sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).digest()


def write_header(fh, backend_id: str, vocab_size: int) -> None:
    ident = backend_id.encode("utf-8")
    fh.write(struct.pack("<4sHIH", MAGIC, VERSION, vocab_size, len(ident)))
    fh.write(ident)


def write_record(fh, key: bytes, values: np.ndarray) -> None:
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    body = key + struct.pack("<I", len(payload) // 4) + payload
    fh.write(body)
    fh.write(struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


class MalformedQueryLine(ValueError):
    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno


def parse_query_lines(stream: TextIO) -> list[tuple[tuple[int, ...], int]]:
    """Read `tokens<TAB>mask positions` lines into (tokens, index) queries.

    Tokens and positions are space-separated integers; every listed position
    expands to one query.  Blank lines are skipped; anything else malformed
    aborts with its line number.
    """
    queries: list[tuple[tuple[int, ...], int]] = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedQueryLine(lineno, "expected 'tokens<TAB>mask positions'")
        try:
            tokens = tuple(int(t) for t in parts[0].split())
            positions = [int(p) for p in parts[1].split()]
        except ValueError:
            raise MalformedQueryLine(lineno, "non-integer token id or position") from None
        if not tokens:
            raise MalformedQueryLine(lineno, "empty token sequence")
        if not positions:
            raise MalformedQueryLine(lineno, "no mask positions")
        for position in positions:
            if not 0 <= position < len(tokens):
                raise MalformedQueryLine(
                    lineno, f"mask position {position} out of range for {len(tokens)} tokens")
            queries.append((tokens, position))
    return queries


def dump_cache(model: MaskedLmModel, queries: Iterable[tuple[Sequence[int], int]],
               output_path: str) -> int:
    """Compute distributions for the queries and write one record per unique query."""
    unique: dict[bytes, tuple[Sequence[int], int]] = {}
    for tokens, masked_index in queries:
        key = query_key(model.backend_id, tokens, masked_index)
        unique.setdefault(key, (tokens, masked_index))
    keys = list(unique)
    vectors = model.distributions([unique[k] for k in keys])
    with open(output_path, "wb") as fh:
        write_header(fh, model.backend_id, model.vocab_size)
        for key, vec in zip(keys, vectors):
            write_record(fh, key, vec)
    return len(keys)
