"""Derived random streams and chunked thread parallelism"""

import hashlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def derive_seed(seed: int, *keys) -> np.random.SeedSequence:
    """SeedSequence keyed by (seed, keys...), independent of call order"""
    digest = hashlib.blake2b(repr((int(seed),) + tuple(keys)).encode("utf-8"), digest_size=16)
    return np.random.SeedSequence(int.from_bytes(digest.digest(), "little"))


def derive_rng(seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *keys))


def chunk_ranges(total: int, chunks: int) -> List[range]:
    """Split range(total) into at most `chunks` contiguous pieces"""
    chunks = max(1, min(chunks, total)) if total > 0 else 1
    size, extra = divmod(total, chunks)
    ranges, start = [], 0
    for index in range(chunks):
        stop = start + size + (1 if index < extra else 0)
        ranges.append(range(start, stop))
        start = stop
    return ranges


def parallel_map(fn: Callable[[T], R], tasks: Sequence[T], threads: int = 1) -> List[R]:
    """Apply fn to every task; results keep task order"""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, tasks))
