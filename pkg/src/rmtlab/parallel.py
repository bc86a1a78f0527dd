"""Order-preserving parallel map over Monte Carlo trials."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_jobs(jobs=None) -> int:
    if jobs is None:
        env = os.environ.get("RMT_LAB_JOBS")
        jobs = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(jobs))


def pmap(fn, items, jobs=1):
    """``[fn(x) for x in items]``, optionally in worker processes.

    Results come back in input order, so anything built from them is
    independent of scheduling.
    """
    items = list(items)
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
