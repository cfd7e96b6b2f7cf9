"""Order-preserving parallel map for parameter sweeps."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally spread over worker processes.

    Each point is computed independently by the same code, so the result is
    bit-identical for any ``threads``.
    """
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
