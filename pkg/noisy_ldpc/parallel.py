"""
Seeded random streams and thread-pool fan-out for Monte-Carlo work.
"""

import asyncio
import logging
import zlib
from concurrent.futures import Executor, ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar, Union

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

StreamKey = Union[int, float, str]


def _key_word(key: StreamKey) -> int:
    """Map one stream key component onto a 32-bit word, stably across processes."""
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"Stream keys must be non-negative, got {key}")
        return int(key)
    return zlib.crc32(repr(key).encode("utf-8"))


def derive_rng(seed: int, *keys: StreamKey) -> np.random.Generator:
    """
    Independent generator for the work item identified by ``keys``.

    The same (seed, keys) always yields the same stream, whichever thread or order the work
    item runs in.
    """
    spawn_key = tuple(_key_word(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=spawn_key))


async def _gather(executor: Executor, func: Callable[[T], R], items: Sequence[T]) -> List[object]:
    loop = asyncio.get_running_loop()
    tasks = [loop.run_in_executor(executor, func, item) for item in items]
    return list(await asyncio.gather(*tasks, return_exceptions=True))


async def run_in_threads(
    func: Callable[[T], R],
    items: Sequence[T],
    threads: int = 1,
    executor: Optional[Executor] = None,
) -> List[R]:
    """
    Apply ``func`` to every item on a thread pool and return results in item order.

    A caller looping over many batches passes its own ``executor``, which is left running;
    otherwise a pool of ``threads`` workers lives for this call only. Any failure is logged
    and the first one re-raised once all tasks have settled.
    """
    if threads < 1:
        raise ValueError(f"threads must be at least 1, got {threads}")
    if not items:
        return []

    if executor is not None:
        results = await _gather(executor, func, items)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = await _gather(pool, func, items)

    first_error: Optional[BaseException] = None
    for index, result in enumerate(results):
        if isinstance(result, BaseException):
            logger.error(f"Work item {index} failed: {result}")
            if first_error is None:
                first_error = result
    if first_error is not None:
        raise first_error
    return list(results)  # type: ignore[arg-type]
