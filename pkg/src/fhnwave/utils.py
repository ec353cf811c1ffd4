import threading
from collections.abc import Callable, Generator, Sequence
from functools import partial
from typing import Any, TypeVar, cast

import anyio
from anyio import to_thread

_R = TypeVar("_R")
_E = TypeVar("_E", bound=BaseException)
_K = TypeVar("_K")

_pool = threading.local()


def deep_update(mapping: dict[_K, Any], *updating_mappings: dict[_K, Any]) -> dict[_K, Any]:
    """Recursively update a mapping with multiple updating mappings."""
    updated_mapping = mapping.copy()
    for updating_mapping in updating_mappings:
        for k, v in updating_mapping.items():
            if (
                k in updated_mapping
                and isinstance(updated_mapping[k], dict)
                and isinstance(v, dict)
            ):
                updated_mapping[k] = deep_update(updated_mapping[k], v)
            else:
                updated_mapping[k] = v
    return updated_mapping


def flatten_exception_group(
    exc_group: BaseExceptionGroup[_E],
) -> Generator[_E, None, None]:
    """Recursively walk a ``BaseExceptionGroup`` and yield the leaf exceptions."""
    for exc in exc_group.exceptions:
        if isinstance(exc, BaseExceptionGroup):
            yield from flatten_exception_group(cast("BaseExceptionGroup[_E]", exc))
        else:
            yield exc


def in_worker_thread() -> bool:
    """Whether the caller runs inside a :func:`run_parallel` worker."""
    return getattr(_pool, "active", False)


def _as_worker(task: Callable[[], _R]) -> _R:
    _pool.active = True
    try:
        return task()
    finally:
        _pool.active = False


async def run_parallel(tasks: Sequence[Callable[[], _R]], *, jobs: int = 1) -> list[_R]:
    """Run blocking callables on worker threads and return results in task order.

    Args:
        tasks: Zero-argument callables, typically ``functools.partial`` objects.
        jobs: Maximum number of callables running at the same time.

    Raises:
        The first leaf exception if any task failed.
    """
    results: list[Any] = [None] * len(tasks)
    limiter = anyio.CapacityLimiter(max(1, jobs))

    async def _run(index: int, task: Callable[[], _R]) -> None:
        results[index] = await to_thread.run_sync(_as_worker, task, limiter=limiter)

    try:
        async with anyio.create_task_group() as tg:
            for index, task in enumerate(tasks):
                tg.start_soon(partial(_run, index, task))
    except BaseExceptionGroup as group:
        raise next(flatten_exception_group(group)) from group
    return results


def run_parallel_sync(tasks: Sequence[Callable[[], _R]], *, jobs: int = 1) -> list[_R]:
    """Synchronous wrapper of :func:`run_parallel`.

    Inside a worker of an outer pool the tasks run in order on the calling
    thread, so ``jobs`` bounds the threads of the whole run.
    """
    if jobs <= 1 or in_worker_thread():
        return [task() for task in tasks]
    return anyio.run(partial(run_parallel, tasks, jobs=jobs))
