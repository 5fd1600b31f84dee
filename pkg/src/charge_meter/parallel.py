from __future__ import annotations

import os

THREADS_ENV = "CHARGE_METER_THREADS"


def thread_cap(tasks: int | None = None) -> int:
    """Worker count allowed by ``CHARGE_METER_THREADS`` (default: CPU count)."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if cap < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    else:
        cap = os.cpu_count() or 1
    if tasks is not None:
        cap = min(cap, max(1, tasks))
    return cap
