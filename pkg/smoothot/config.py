"""Environment configuration."""

from __future__ import annotations

import os

from .errors import InvalidConfigError

MAX_WORKERS_ENV = "SMOOTHOT_MAX_WORKERS"


def max_workers(value: int | None = None) -> int:
    """Column fan-out width: ``value`` if given, else ``$SMOOTHOT_MAX_WORKERS``, else 1."""
    if value is None:
        raw = os.environ.get(MAX_WORKERS_ENV)
        if raw is None or raw.strip() == "":
            return 1
        try:
            value = int(raw)
        except ValueError:
            raise InvalidConfigError(
                f"{MAX_WORKERS_ENV} must be a positive integer, got {raw!r}."
            ) from None
    if value < 1:
        raise InvalidConfigError(f"max_workers must be positive, got {value}.")
    return value
