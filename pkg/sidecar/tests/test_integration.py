"""Contract tests against the parsing package over a real HTTP socket."""

import numpy as np


def test_sidecar_contract_with_primary(live_server, tiny_model, tmp_path):
    """Health, sum, determinism, and dump-vs-live equality through the consumer."""
    from dpndd.cache import DistributionCache
    from dpndd.provider import DistributionProvider, HttpBackend, MaskQuery

    from mlm_server.cachedump import dump_cache

    backend = HttpBackend(live_server)
    assert backend.vocab_size == tiny_model.vocab_size
    assert backend.backend_id == "tiny-test-model"

    provider = DistributionProvider(backend)
    queries = [MaskQuery(tokens=(2, 5, 6, 7, 3), masked_index=k) for k in range(5)]
    live = provider.get_distributions_batch(queries)
    for vec in live:
        assert abs(float(vec.sum()) - 1.0) <= 1e-4

    again = DistributionProvider(HttpBackend(live_server)).get_distributions_batch(queries)
    for first, second in zip(live, again):
        assert np.array_equal(first, second)

    dump_path = tmp_path / "dump.cache"
    dump_cache(tiny_model, [(q.tokens, q.masked_index) for q in queries],
               str(dump_path))
    offline = DistributionProvider(cache=DistributionCache(dump_path, create=False))
    cached = offline.get_distributions_batch(queries)
    for live_vec, cached_vec in zip(live, cached):
        assert np.max(np.abs(live_vec - cached_vec)) < 1e-6
    print("\nACCEPTANCE sidecar-contract: PASS")


def test_wire_round_trip_precision(live_server, tiny_model):
    """Decoded wire vectors equal the server-side computation to 1e-6."""
    from dpndd.provider import DistributionProvider, HttpBackend, MaskQuery

    provider = DistributionProvider(HttpBackend(live_server))
    query = ((2, 5, 6, 3), 2)
    server_side = np.asarray(tiny_model.distributions([query])[0], dtype=np.float64)
    wire = provider.get_distribution(MaskQuery(tokens=query[0], masked_index=query[1]))
    assert np.max(np.abs(wire - server_side)) < 1e-6


def test_single_and_batch_endpoints_agree(live_server):
    from dpndd.provider import DistributionProvider, HttpBackend, MaskQuery

    backend = HttpBackend(live_server)
    queries = [MaskQuery(tokens=(2, 5, 6, 3), masked_index=k) for k in range(3)]
    singles = [backend.fetch([q])[0] for q in queries]
    batched = backend.fetch(queries)
    for got, want in zip(batched, singles):
        assert np.allclose(got, want, atol=1e-6)
