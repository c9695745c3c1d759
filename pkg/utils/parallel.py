"""
Utilities for batching and order-preserving parallel processing.
"""

# Standard library imports
import logging
from typing import Any, Callable, Iterator, List, Sequence, TypeVar

# Type variables for generic function signatures
T = TypeVar("T")
R = TypeVar("R")


def iter_batches(items: Sequence[T], batch_size: int) -> Iterator[Sequence[T]]:
    """
    Yield consecutive slices of at most batch_size items.

    Args:
        items: Input sequence
        batch_size: Size of each batch

    Returns:
        Iterator over batches, in order
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    for i in range(0, len(items), batch_size):
        yield items[i : i + batch_size]


def parallel_map(func: Callable[[T], R], items: Sequence[T], n_jobs: int = 1) -> List[R]:
    """
    Apply a function to every item, optionally in parallel, preserving input order.

    Args:
        func: Function to apply (must be picklable for process backends)
        items: Input items
        n_jobs: Number of parallel jobs (1 runs serially, -1 uses all cores)

    Returns:
        List of results in input order
    """
    if n_jobs == 1 or len(items) < 2:
        return [func(item) for item in items]

    try:
        from joblib import Parallel, delayed

        # Results come back in submission order, so merges stay deterministic
        results = Parallel(n_jobs=n_jobs)(delayed(func)(item) for item in items)
        return list(results)

    except ImportError:
        # Fall back to serial processing if joblib not available
        logging.warning("joblib not available, falling back to serial processing")
        return [func(item) for item in items]


def parallel_starmap(func: Callable[..., R], arg_tuples: Sequence[tuple], n_jobs: int = 1) -> List[R]:
    """Like parallel_map, but unpacks each tuple into positional arguments."""
    return parallel_map(_Star(func), arg_tuples, n_jobs=n_jobs)


class _Star:
    def __init__(self, func: Callable[..., Any]):
        self.func = func

    def __call__(self, args: tuple) -> Any:
        return self.func(*args)
