"""Counter-based random streams and deterministic chunked execution.

Paths are split into fixed-size chunks.  Chunk ``i`` draws from a Philox
stream keyed by ``(seed, i)``, so results do not depend on how many workers
run the chunks or in which order they finish.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")

CHUNK = 8192
THREADS_ENV = "ENLARGEMENT_LAB_THREADS"


def stream(seed: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(chunk,))
    return np.random.Generator(np.random.Philox(ss))


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def chunk_sizes(n: int, size: int = CHUNK) -> list[int]:
    full, rest = divmod(n, size)
    return [size] * full + ([rest] if rest else [])


def run_chunks(fn: Callable[[np.random.Generator, int], T], n: int, seed: int, size: int = CHUNK) -> list[T]:
    """Apply ``fn(rng, count)`` to every chunk; results come back in chunk order."""
    sizes = chunk_sizes(n, size)
    jobs = [(stream(seed, i), c) for i, c in enumerate(sizes)]
    workers = min(worker_count(), len(jobs)) or 1
    if workers == 1:
        return [fn(rng, c) for rng, c in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def merge_sums(parts: list[dict[str, np.ndarray]]) -> dict[str, np.ndarray]:
    """Add per-chunk sufficient statistics in chunk order."""
    out: dict[str, np.ndarray] = {}
    for part in parts:
        for key, val in part.items():
            out[key] = out[key] + val if key in out else np.array(val, dtype=float)
    return out
