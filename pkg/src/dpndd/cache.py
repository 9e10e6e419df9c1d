"""On-disk and in-memory caches for masked-LM distributions.

File layout (all integers little-endian):

    header:  magic b"NDDC" | u16 version | u32 vocab_size
             | u16 backend_id length | backend_id utf-8 bytes
    record:  32-byte sha256 key | u32 count | count * f32 values
             | u32 crc32 of (key + count + values)

Records are append-only; the key of a (tokens, masked_index) query is bound
to the backend identifier so caches produced by different models never
collide.  A truncated trailing record (interrupted write) is ignored on
open; a record whose checksum fails on read raises `CacheCorruption`.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import struct
import threading
from typing import Iterator, Sequence

import numpy as np

from .errors import CacheCorruption, ConfigError

MAGIC = b"NDDC"
VERSION = 1

_HEADER_FIXED = struct.Struct("<4sHIH")
_REC_COUNT = struct.Struct("<I")
_REC_CRC = struct.Struct("<I")
KEY_SIZE = 32


def make_key(backend_id: str, tokens: Sequence[int], masked_index: int) -> bytes:
    """Derive the 32-byte cache key for one masked query."""
    payload = json.dumps(
        {"backend": backend_id, "masked_index": int(masked_index), "tokens": [int(t) for t in tokens]},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).digest()


def encode_header(backend_id: str, vocab_size: int) -> bytes:
    ident = backend_id.encode("utf-8")
    return _HEADER_FIXED.pack(MAGIC, VERSION, vocab_size, len(ident)) + ident


def encode_record(key: bytes, values: np.ndarray) -> bytes:
    """Serialize one cache record; `values` is canonicalized to float32."""
    if len(key) != KEY_SIZE:
        raise ValueError(f"cache key must be {KEY_SIZE} bytes")
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    body = key + _REC_COUNT.pack(len(payload) // 4) + payload
    import zlib

    return body + _REC_CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def _check_crc(body: bytes, crc: int) -> bool:
    import zlib

    return (zlib.crc32(body) & 0xFFFFFFFF) == crc


class DistributionCache:
    """Memoization table for distributions, optionally backed by a record file.

    With `path=None` the cache lives purely in memory.  File-backed caches
    build an offset index on open and read vectors lazily, so multi-gigabyte
    caches stay cheap to open.  Reads and appends are serialized with an
    internal lock; instances are safe to share across threads.
    """

    def __init__(self, path: str | os.PathLike | None = None, *,
                 backend_id: str | None = None, vocab_size: int | None = None,
                 create: bool = True):
        self.path = os.fspath(path) if path is not None else None
        self.backend_id = backend_id
        self.vocab_size = vocab_size
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()
        self._mem: dict[bytes, bytes] = {}
        self._index: dict[bytes, tuple[int, int]] = {}
        self._fh: io.BufferedRandom | None = None
        if self.path is not None:
            self._open_file(create=create)

    def _open_file(self, create: bool) -> None:
        exists = os.path.exists(self.path) and os.path.getsize(self.path) > 0
        if not exists and not create:
            raise ConfigError(f"cache file not found: {self.path}")
        if not exists:
            if self.backend_id is None or self.vocab_size is None:
                raise ConfigError("creating a cache file requires backend_id and vocab_size")
            self._fh = open(self.path, "w+b")
            self._fh.write(encode_header(self.backend_id, self.vocab_size))
            self._fh.flush()
            return
        self._fh = open(self.path, "r+b")
        self._read_header()
        self._build_index()

    def _read_header(self) -> None:
        fh = self._fh
        fixed = fh.read(_HEADER_FIXED.size)
        if len(fixed) < _HEADER_FIXED.size:
            raise CacheCorruption(f"cache file too short: {self.path}")
        magic, version, vocab_size, ident_len = _HEADER_FIXED.unpack(fixed)
        if magic != MAGIC:
            raise CacheCorruption(f"bad magic in cache file: {self.path}")
        if version != VERSION:
            raise CacheCorruption(f"unsupported cache version {version}: {self.path}")
        ident = fh.read(ident_len).decode("utf-8")
        if self.backend_id is not None and self.backend_id != ident:
            raise ConfigError(
                f"cache {self.path} was produced by backend {ident!r}, not {self.backend_id!r}")
        if self.vocab_size is not None and self.vocab_size != vocab_size:
            raise ConfigError(
                f"cache {self.path} has vocab size {vocab_size}, expected {self.vocab_size}")
        self.backend_id = ident
        self.vocab_size = vocab_size

    def _build_index(self) -> None:
        fh = self._fh
        size = os.fstat(fh.fileno()).st_size
        pos = fh.tell()
        while pos < size:
            if pos + KEY_SIZE + _REC_COUNT.size > size:
                break  # truncated trailing record
            fh.seek(pos)
            key = fh.read(KEY_SIZE)
            (count,) = _REC_COUNT.unpack(fh.read(_REC_COUNT.size))
            values_off = pos + KEY_SIZE + _REC_COUNT.size
            end = values_off + 4 * count + _REC_CRC.size
            if end > size:
                break
            self._index[key] = (values_off, count)
            pos = end
        fh.seek(0, os.SEEK_END)

    def __len__(self) -> int:
        with self._lock:
            return len(self._index) if self.path is not None else len(self._mem)

    def __contains__(self, key: bytes) -> bool:
        with self._lock:
            return key in (self._index if self.path is not None else self._mem)

    def get(self, key: bytes) -> np.ndarray | None:
        """Return the cached float64 vector for `key`, or None on a miss."""
        with self._lock:
            if self.path is None:
                raw = self._mem.get(key)
                if raw is None:
                    self.misses += 1
                    return None
                self.hits += 1
                return np.frombuffer(raw, dtype="<f4").astype(np.float64)
            entry = self._index.get(key)
            if entry is None:
                self.misses += 1
                return None
            values_off, count = entry
            self._fh.seek(values_off)
            payload = self._fh.read(4 * count)
            (crc,) = _REC_CRC.unpack(self._fh.read(_REC_CRC.size))
            self._fh.seek(0, os.SEEK_END)
            body = key + _REC_COUNT.pack(count) + payload
            if not _check_crc(body, crc):
                raise CacheCorruption(f"checksum failure for record at {values_off} in {self.path}")
            self.hits += 1
            return np.frombuffer(payload, dtype="<f4").astype(np.float64)

    def put(self, key: bytes, values: np.ndarray) -> None:
        """Insert a vector; an existing record for `key` is left untouched."""
        with self._lock:
            if self.path is None:
                if key not in self._mem:
                    self._mem[key] = np.ascontiguousarray(values, dtype="<f4").tobytes()
                return
            if key in self._index:
                return
            record = encode_record(key, values)
            self._fh.seek(0, os.SEEK_END)
            offset = self._fh.tell()
            self._fh.write(record)
            self._fh.flush()
            self._index[key] = (offset + KEY_SIZE + _REC_COUNT.size, (len(record) - KEY_SIZE - 8) // 4)

    def keys(self) -> Iterator[bytes]:
        with self._lock:
            source = self._index if self.path is not None else self._mem
            return iter(list(source.keys()))

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    def __enter__(self) -> "DistributionCache":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
