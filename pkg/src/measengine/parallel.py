"""Process-pool helper with deterministic, order-preserving results."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

from .errors import InvalidArgument

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "MEASENGINE_WORKERS"


def worker_count(requested: int | None = None) -> int:
    """Resolve the number of worker processes.

    An explicit ``requested`` wins; otherwise ``MEASENGINE_WORKERS`` is read,
    falling back to 1 (serial).
    """
    if requested is None:
        raw = os.environ.get(ENV_VAR, "").strip()
        if not raw:
            return 1
        try:
            requested = int(raw)
        except ValueError as exc:
            raise InvalidArgument(f"{ENV_VAR} must be an integer, got {raw!r}") from exc
    if requested < 1:
        raise InvalidArgument(f"worker count must be >= 1, got {requested}")
    return requested


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, optionally evaluated in a process pool."""
    items = list(items)
    n = min(worker_count(workers), max(len(items), 1))
    if n == 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
