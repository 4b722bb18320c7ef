"""Column-block dispatch for the batch drivers.

Work is always split into fixed 512-column blocks so numerical results are
byte-identical no matter how many worker threads execute them; the thread
count only controls concurrency. numpy releases the GIL inside BLAS, which
is where these drivers spend their time.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

BLOCK = 512

__all__ = ["BLOCK", "resolve_threads", "run_blocks"]


def resolve_threads(explicit: int | None = None) -> int:
    """Thread count: explicit value, else USM_THREADS, else all cores."""
    if explicit is None:
        env = os.environ.get("USM_THREADS", "").strip()
        explicit = int(env) if env else (os.cpu_count() or 1)
    if explicit < 1:
        raise ValueError(f"thread count must be >= 1, got {explicit}")
    return explicit


def run_blocks(fn, n_items: int, threads: int | None = None, block: int = BLOCK):
    """Apply ``fn(start, stop)`` over fixed-size index blocks, in order.

    Returns the list of per-block results. With one thread (or one block)
    the calls run inline; otherwise a thread pool executes them, and the
    result order still follows block order.
    """
    threads = resolve_threads(threads)
    spans = [(i, min(i + block, n_items)) for i in range(0, n_items, block)]
    if threads <= 1 or len(spans) <= 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=min(threads, len(spans))) as pool:
        futures = [pool.submit(fn, a, b) for a, b in spans]
        return [f.result() for f in futures]
