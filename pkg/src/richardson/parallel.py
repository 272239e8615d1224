"""Replica fan-out over a process pool with results in replica order."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


class ReplicaError(RuntimeError):
    def __init__(self, replica: int, cause: BaseException):
        super().__init__(f"replica {replica} failed: {cause!r}")
        self.replica = replica


def _chunk(fn, lo, hi, args):
    out = []
    for r in range(lo, hi):
        try:
            out.append(fn(r, *args))
        except Exception as exc:
            raise ReplicaError(r, exc) from exc
    return out


def map_replicas(fn, n: int, args=(), workers: int = 1) -> list:
    """``[fn(r, *args) for r in range(n)]``, optionally over `workers` processes.

    `fn` must be a module-level function. Results do not depend on the
    worker count.
    """
    if workers <= 1 or n <= 1:
        return _chunk(fn, 0, n, args)
    n_chunks = min(n, workers * 4)
    bounds = [round(i * n / n_chunks) for i in range(n_chunks + 1)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_chunk, fn, lo, hi, args)
                   for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        out = []
        for fut in futures:
            out.extend(fut.result())
    return out
