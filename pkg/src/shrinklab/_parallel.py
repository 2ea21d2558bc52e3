import os
from concurrent.futures import ThreadPoolExecutor


def max_threads() -> int:
    """Worker cap from SHRINKLAB_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("SHRINKLAB_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items):
    items = list(items)
    workers = min(max_threads(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
