import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "ONESIDED_THREADS"


def thread_count(requested: int | None = None) -> int:
    """Worker count: explicit request, else CPU count; always capped by ONESIDED_THREADS."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(ENV_THREADS)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, int(n))


def run_chunks(fn, chunks, threads: int):
    """Apply ``fn`` to every chunk, in a thread pool when ``threads > 1``; keeps order."""
    chunks = list(chunks)
    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def split_range(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n))
    edges = [n * i // parts for i in range(parts + 1)]
    return [(a, b) for a, b in zip(edges, edges[1:]) if b > a]
