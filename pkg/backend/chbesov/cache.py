import functools
import threading
from typing import Any, Callable, TypeVar

from chbesov.logger import logger

F = TypeVar("F", bound=Callable[..., Any])

# Keyed on (function name, *args, sorted kwargs); every argument must be hashable.
_tables: dict[tuple, Any] = {}
# Reentrant: partition_for builds its tables through lattice.
_tables_lock = threading.RLock()


def cache(func: F) -> F:
    """Memoise a table builder for the lifetime of the process."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        key = (func.__name__,) + args + tuple(sorted(kwargs.items()))
        with _tables_lock:
            if key not in _tables:
                _tables[key] = func(*args, **kwargs)
            return _tables[key]

    return wrapper  # type: ignore[return-value]


def clear_cache() -> int:
    """Drop every memoised table. Returns the number of entries removed."""
    with _tables_lock:
        size = len(_tables)
        _tables.clear()
    if size:
        logger.debug(f"Dropped {size} cached tables")
    return size
