"""
Runtime configuration for the QROM advice lab.

Settings are read from environment variables, optionally seeded from a
local ``.env`` file, mirroring how the storage and database layers of the
project pick up their connection details.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from contextvars import ContextVar, copy_context
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, List, Optional, TypeVar

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(float(raw))
    except ValueError:
        logger.warning(f"Ignoring non-numeric {name}={raw!r}, using {default}")
        return default


@dataclass(frozen=True)
class Settings:
    """Scale caps and output locations."""

    enumeration_cap: int = 10**6
    max_dimension: int = 2**14
    max_rounds: int = 64
    subset_cap: int = 10**6
    map_cap: int = 10**5
    threads: int = 1
    output_dir: str = "results"
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        """
        Build settings from the environment.

        Returns:
            Settings with every unset variable at its default.
        """
        load_dotenv()
        defaults = cls()
        return cls(
            enumeration_cap=_env_int("QROM_ENUMERATION_CAP", defaults.enumeration_cap),
            max_dimension=_env_int("QROM_MAX_DIMENSION", defaults.max_dimension),
            max_rounds=_env_int("QROM_MAX_ROUNDS", defaults.max_rounds),
            subset_cap=_env_int("QROM_SUBSET_CAP", defaults.subset_cap),
            map_cap=_env_int("QROM_MAP_CAP", defaults.map_cap),
            threads=max(1, _env_int("QROM_THREADS", defaults.threads)),
            output_dir=os.getenv("QROM_OUTPUT_DIR", defaults.output_dir),
            log_level=os.getenv("QROM_LOG_LEVEL", defaults.log_level),
        )


_override: ContextVar[Optional[Settings]] = ContextVar("qrom_settings", default=None)


@lru_cache(maxsize=1)
def env_settings() -> Settings:
    """Process-wide settings, read once."""
    return Settings.from_env()


def get_settings() -> Settings:
    """The active override, or the environment settings."""
    return _override.get() or env_settings()


@contextmanager
def override_settings(settings: Optional[Settings]) -> Iterator[Settings]:
    """
    Use ``settings`` for everything run inside the block.

    The override is scoped to the current context and copied into
    ``parallel_map`` workers; nothing outside the block sees it.
    """
    if settings is None:
        yield get_settings()
        return
    token = _override.set(settings)
    try:
        yield settings
    finally:
        _override.reset(token)


def parallel_map(fn: Callable[[T], R], items: Iterable[T],
                 threads: Optional[int] = None) -> List[R]:
    """
    Order-preserving map over a thread pool.

    Args:
        fn: Function applied to every item.
        items: Inputs.
        threads: Worker count; defaults to the configured ``QROM_THREADS``.

    Returns:
        Results in input order.
    """
    items = list(items)
    threads = threads or get_settings().threads
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(copy_context().run, fn, item) for item in items]
        return [f.result() for f in futures]
