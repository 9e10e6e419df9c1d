import io

import numpy as np
import pytest

from mlm_server.cachedump import (MalformedQueryLine, dump_cache, parse_query_lines,
                                  query_key)


class TestQueryLines:
    def test_basic_lines(self):
        stream = io.StringIO("2 5 6 3\t1 2\n\n2 9 3\t0\n")
        queries = parse_query_lines(stream)
        assert queries == [((2, 5, 6, 3), 1), ((2, 5, 6, 3), 2), ((2, 9, 3), 0)]

    def test_malformed_aborts_with_line_number(self):
        with pytest.raises(MalformedQueryLine) as exc:
            parse_query_lines(io.StringIO("2 5 3\t0\nnot numbers\there\n"))
        assert exc.value.lineno == 2
        with pytest.raises(MalformedQueryLine) as exc:
            parse_query_lines(io.StringIO("2 5 3\t7\n"))
        assert "out of range" in str(exc.value)
        with pytest.raises(MalformedQueryLine):
            parse_query_lines(io.StringIO("no tab separator\n"))

    def test_empty_input(self):
        assert parse_query_lines(io.StringIO("")) == []


class TestDump:
    def test_empty_dump_is_a_valid_cache(self, tiny_model, tmp_path):
        from dpndd.cache import DistributionCache

        path = tmp_path / "empty.cache"
        assert dump_cache(tiny_model, [], str(path)) == 0
        with DistributionCache(path, create=False) as cache:
            assert len(cache) == 0
            assert cache.backend_id == "tiny-test-model"
            assert cache.vocab_size == tiny_model.vocab_size

    def test_duplicate_queries_single_record(self, tiny_model, tmp_path):
        path = tmp_path / "dup.cache"
        written = dump_cache(tiny_model, [((2, 5, 3), 1), ((2, 5, 3), 1)], str(path))
        assert written == 1

    def test_key_derivation_matches_consumer(self):
        from dpndd.cache import make_key

        assert query_key("b", (1, 2, 3), 1) == make_key("b", (1, 2, 3), 1)

    def test_dump_equals_live_computation(self, tiny_model, tmp_path):
        from dpndd.cache import DistributionCache, make_key

        queries = [((2, 5, 6, 7, 3), k) for k in range(5)]
        path = tmp_path / "live.cache"
        dump_cache(tiny_model, queries, str(path))
        live = tiny_model.distributions(queries)
        with DistributionCache(path, create=False) as cache:
            for (tokens, idx), want in zip(queries, live):
                got = cache.get(make_key("tiny-test-model", tokens, idx))
                assert got is not None
                assert np.max(np.abs(got - np.asarray(want, dtype=np.float64))) < 1e-6
