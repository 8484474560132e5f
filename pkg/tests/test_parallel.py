"""
Tests for seeded streams and thread fan-out.
"""

import threading
from concurrent.futures import ThreadPoolExecutor
from unittest.mock import patch

import numpy as np
import pytest

from noisy_ldpc.parallel import derive_rng, run_in_threads


class TestDeriveRng:
    def test_same_key_same_stream(self):
        a = derive_rng(5, 2, 17).standard_normal(4)
        b = derive_rng(5, 2, 17).standard_normal(4)
        np.testing.assert_array_equal(a, b)

    def test_keys_separate_streams(self):
        base = derive_rng(5, 2, 17).standard_normal(4)
        assert not np.array_equal(base, derive_rng(5, 2, 18).standard_normal(4))
        assert not np.array_equal(base, derive_rng(6, 2, 17).standard_normal(4))

    def test_string_keys(self):
        a = derive_rng(0, "density", 3).random()
        assert a == derive_rng(0, "density", 3).random()
        assert a != derive_rng(0, "variable", 3).random()

    def test_negative_key(self):
        with pytest.raises(ValueError, match="non-negative"):
            derive_rng(0, -1)


class TestRunInThreads:
    @pytest.mark.asyncio
    async def test_results_follow_item_order(self):
        assert await run_in_threads(lambda x: x * x, [3, 1, 2], threads=3) == [9, 1, 4]

    @pytest.mark.asyncio
    async def test_empty(self):
        assert await run_in_threads(lambda x: x, [], threads=2) == []

    @pytest.mark.asyncio
    async def test_invalid_thread_count(self):
        with pytest.raises(ValueError, match="threads"):
            await run_in_threads(lambda x: x, [1], threads=0)

    @pytest.mark.asyncio
    async def test_failure_is_logged_and_raised(self):
        def work(x):
            if x == 2:
                raise RuntimeError("boom")
            return x

        with patch("noisy_ldpc.parallel.logger") as mock_logger:
            with pytest.raises(RuntimeError, match="boom"):
                await run_in_threads(work, [1, 2, 3], threads=2)
        mock_logger.error.assert_called_once()

    @pytest.mark.asyncio
    async def test_caller_executor_is_reused_and_left_open(self):
        seen = set()

        def work(x):
            seen.add(threading.current_thread().name)
            return x + 1

        with ThreadPoolExecutor(max_workers=2, thread_name_prefix="shared") as pool:
            with patch("noisy_ldpc.parallel.ThreadPoolExecutor") as mock_pool:
                for start in range(0, 20, 2):
                    assert await run_in_threads(work, [start, start + 1], 2, executor=pool) == [
                        start + 1,
                        start + 2,
                    ]
                mock_pool.assert_not_called()
            assert pool.submit(lambda: 7).result() == 7

        assert all(name.startswith("shared") for name in seen)
