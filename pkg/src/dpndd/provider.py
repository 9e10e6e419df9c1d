"""Uniform access to masked-LM token distributions.

A provider answers `MaskQuery` objects from a cache, a remote inference
service, or both.  All distributions are canonicalized to float32 precision
on ingestion (the cache and the wire both carry float32), so results are
identical whether they arrive live or from a cache file.
"""

from __future__ import annotations

import hashlib
import urllib.parse
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
import requests

from .cache import DistributionCache, make_key
from .errors import BackendUnavailable, ConfigError, VocabMismatch

SUM_TOLERANCE = 1e-4


@dataclass(frozen=True)
class MaskQuery:
    """One masked position in a token-id sequence."""

    tokens: tuple[int, ...]
    masked_index: int

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(int(t) for t in self.tokens))
        if not self.tokens:
            raise ValueError("MaskQuery.tokens must be non-empty")
        if not 0 <= self.masked_index < len(self.tokens):
            raise ValueError(
                f"masked_index {self.masked_index} out of range for {len(self.tokens)} tokens")


def validate_distribution(vec: np.ndarray, vocab_size: int) -> None:
    if vec.shape != (vocab_size,):
        raise VocabMismatch(f"expected vector of length {vocab_size}, got {vec.shape}")
    if np.any(vec < 0):
        raise ValueError("distribution has negative entries")
    total = float(vec.sum())
    if not (1 - SUM_TOLERANCE) <= total <= (1 + SUM_TOLERANCE):
        raise ValueError(f"distribution sums to {total}, outside 1 +/- {SUM_TOLERANCE}")


class Backend(Protocol):
    """Source of fresh distributions for cache misses."""

    backend_id: str
    vocab_size: int

    def fetch(self, queries: Sequence[MaskQuery]) -> list[np.ndarray]: ...


class MockBackend:
    """Deterministic offline backend for tests and fixtures.

    Each query maps to a fixed pseudo-random distribution derived from a
    digest of (seed, tokens, masked_index); `uniform=True` returns the
    uniform distribution instead.
    """

    def __init__(self, vocab_size: int, *, seed: int = 0, uniform: bool = False,
                 backend_id: str | None = None):
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        self.vocab_size = vocab_size
        self.seed = seed
        self.uniform = uniform
        self.backend_id = backend_id or f"mock-v{vocab_size}-s{seed}{'-u' if uniform else ''}"

    def fetch(self, queries: Sequence[MaskQuery]) -> list[np.ndarray]:
        return [self._one(q) for q in queries]

    def _one(self, query: MaskQuery) -> np.ndarray:
        if self.uniform:
            return np.full(self.vocab_size, 1.0 / self.vocab_size)
        payload = f"{self.seed}|{query.masked_index}|{','.join(map(str, query.tokens))}"
        digest = hashlib.sha256(payload.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        vec = rng.random(self.vocab_size) + 1e-3
        return vec / vec.sum()


class HttpBackend:
    """Client for the inference sidecar's JSON wire protocol."""

    def __init__(self, endpoint: str, *, timeout: float = 60.0,
                 session: requests.Session | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        health = self._request("GET", "/health")
        self.vocab_size = int(health["vocab_size"])
        self.backend_id = str(health["backend"])

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        try:
            resp = self._session.request(
                method, self.endpoint + path, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"cannot reach {self.endpoint}{path}: {exc}") from exc
        if resp.status_code == 503:
            raise BackendUnavailable(f"service at {self.endpoint} has no model loaded")
        if resp.status_code == 400:
            raise ValueError(f"service rejected request: {resp.text}")
        if resp.status_code != 200:
            raise BackendUnavailable(
                f"unexpected status {resp.status_code} from {self.endpoint}{path}")
        return resp.json()

    def fetch(self, queries: Sequence[MaskQuery]) -> list[np.ndarray]:
        if len(queries) == 1:
            q = queries[0]
            data = self._request("POST", "/distribution",
                                 {"tokens": list(q.tokens), "masked_index": q.masked_index})
            return [np.asarray(data["probs"], dtype=np.float64)]
        data = self._request("POST", "/distributions", {
            "queries": [{"tokens": list(q.tokens), "masked_index": q.masked_index}
                        for q in queries]})
        return [np.asarray(probs, dtype=np.float64) for probs in data["results"]]


def backend_from_url(url: str) -> Backend:
    """Build a backend from an endpoint URL; `mock://<vocab>?seed=N` is supported."""
    parsed = urllib.parse.urlparse(url)
    if parsed.scheme == "mock":
        params = dict(urllib.parse.parse_qsl(parsed.query))
        return MockBackend(
            int(parsed.netloc or params.get("vocab", "64")),
            seed=int(params.get("seed", "0")),
            uniform=params.get("uniform", "0") not in ("0", "", "false"),
        )
    if parsed.scheme in ("http", "https"):
        return HttpBackend(url)
    raise ConfigError(f"unsupported endpoint scheme: {url}")


class DistributionProvider:
    """Cache-first access to masked-LM distributions.

    Results are deterministic for a pinned backend: a query is answered from
    the cache when possible, otherwise fetched from the backend and inserted
    into the cache.  With no explicit cache an in-memory one is used, so
    repeated queries within a process never hit the service twice.
    """

    def __init__(self, backend: Backend | None = None,
                 cache: DistributionCache | None = None, *, batch_size: int = 32):
        if backend is None and cache is None:
            raise ConfigError("provider needs a backend, a cache, or both")
        if backend is not None and cache is not None:
            if cache.backend_id is not None and cache.backend_id != backend.backend_id:
                raise ConfigError(
                    f"cache backend {cache.backend_id!r} != live backend {backend.backend_id!r}")
            if cache.vocab_size is not None and cache.vocab_size != backend.vocab_size:
                raise ConfigError("cache and backend disagree on vocabulary size")
        self.backend = backend
        if cache is None:
            cache = DistributionCache(
                backend_id=backend.backend_id, vocab_size=backend.vocab_size)
        self.cache = cache
        self.backend_id = backend.backend_id if backend is not None else cache.backend_id
        self.vocab_size = backend.vocab_size if backend is not None else cache.vocab_size
        if self.backend_id is None or self.vocab_size is None:
            raise ConfigError("cache-only provider requires a cache file with a header")
        self.batch_size = batch_size

    def key_for(self, query: MaskQuery) -> bytes:
        return make_key(self.backend_id, query.tokens, query.masked_index)

    def get_distribution(self, query: MaskQuery) -> np.ndarray:
        return self.get_distributions_batch([query])[0]

    def get_distributions_batch(self, queries: Sequence[MaskQuery]) -> list[np.ndarray]:
        """Answer queries in order; a batch fails atomically."""
        queries = list(queries)
        for q in queries:
            if not isinstance(q, MaskQuery):
                raise TypeError("batch items must be MaskQuery")
        keys = [self.key_for(q) for q in queries]
        results: list[np.ndarray | None] = [self.cache.get(k) for k in keys]
        miss_keys: list[bytes] = []
        miss_queries: list[MaskQuery] = []
        seen: set[bytes] = set()
        for key, query, hit in zip(keys, queries, results):
            if hit is None and key not in seen:
                seen.add(key)
                miss_keys.append(key)
                miss_queries.append(query)
        if miss_queries:
            if self.backend is None:
                raise BackendUnavailable(
                    f"{len(miss_queries)} queries missing from cache and no service configured")
            fetched: dict[bytes, np.ndarray] = {}
            for lo in range(0, len(miss_queries), self.batch_size):
                chunk = miss_queries[lo:lo + self.batch_size]
                vectors = self.backend.fetch(chunk)
                if len(vectors) != len(chunk):
                    raise BackendUnavailable("service returned a short batch")
                for key, vec in zip(miss_keys[lo:lo + self.batch_size], vectors):
                    vec = np.asarray(vec, dtype=np.float64)
                    validate_distribution(vec, self.vocab_size)
                    vec = vec.astype(np.float32).astype(np.float64)  # canonical f32 precision
                    fetched[key] = vec
            for key, vec in fetched.items():
                self.cache.put(key, vec)
            for pos, key in enumerate(keys):
                if results[pos] is None:
                    results[pos] = fetched[key]
        return results  # type: ignore[return-value]
