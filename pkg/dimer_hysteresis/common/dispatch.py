import asyncio
import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from functools import partial
from typing import Any, Callable, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")

MAX_WORKERS_ENV = "DIMER_HYSTERESIS_MAX_WORKERS"


def max_workers_from_env(default: Optional[int] = None) -> int:
    """Worker cap from DIMER_HYSTERESIS_MAX_WORKERS, else the CPU count"""
    value = os.environ.get(MAX_WORKERS_ENV)
    if value:
        try:
            workers = int(value)
            if workers >= 1:
                return workers
            logger.warning(f"Ignoring non-positive {MAX_WORKERS_ENV}={value}")
        except ValueError:
            logger.warning(f"Ignoring invalid {MAX_WORKERS_ENV}={value}")
    if default is not None:
        return default
    return os.cpu_count() or 1


def _make_executor(kind: str, workers: int) -> Executor:
    if kind == "process":
        return ProcessPoolExecutor(max_workers=workers)
    if kind == "thread":
        return ThreadPoolExecutor(max_workers=workers)
    raise ValueError(f"Unknown executor kind: {kind}")


async def gather_ordered(
    func: Callable[..., T],
    jobs: Sequence[Any],
    max_workers: Optional[int] = None,
    kind: str = "process",
) -> List[T]:
    """Run func(job) for every job concurrently, results in job order

    With one worker (or one job) everything runs inline on the event loop
    thread, which keeps small runs and tests free of pool start-up costs.

    Args:
        func: picklable callable when kind is "process"
        jobs: one argument per call
        max_workers: pool size, defaults to DIMER_HYSTERESIS_MAX_WORKERS
        kind: "process" or "thread"
    """
    workers = max_workers if max_workers is not None else max_workers_from_env()
    workers = max(1, min(workers, len(jobs))) if jobs else 1
    if workers == 1:
        return [func(job) for job in jobs]

    logger.debug(f"Dispatching {len(jobs)} jobs to {workers} {kind} workers")
    loop = asyncio.get_running_loop()
    with _make_executor(kind, workers) as pool:
        futures = [loop.run_in_executor(pool, partial(func, job)) for job in jobs]
        return list(await asyncio.gather(*futures))
