"""Order-preserving worker-pool dispatch for independent simulations."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def deterministic_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """map(fn, items) with optional process parallelism.

    Results always come back in input order, so serial and parallel runs
    produce identical output streams. fn and items must be picklable when
    jobs > 1.
    """
    tasks: Sequence[T] = list(items)
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))
