"""Order-preserving parallel map for independent, seeded work units.

Because every unit owns its seed, results are identical for any worker count;
only wall-clock time changes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def pmap(fn, items, jobs: int = 1) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))
