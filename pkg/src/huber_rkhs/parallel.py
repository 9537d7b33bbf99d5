"""Order-preserving map over independent trials."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def run_tasks(fn, tasks, jobs=1):
    """``[fn(*t) for t in tasks]``, optionally spread over ``jobs`` processes.

    Results come back in task order and every task derives its own random
    stream, so the output does not depend on ``jobs``.
    """
    tasks = list(tasks)
    if jobs is None or jobs <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
        return list(pool.map(fn, *zip(*tasks), chunksize=max(1, len(tasks) // (4 * jobs))))
