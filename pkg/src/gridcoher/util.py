"""Small shared helpers."""

from __future__ import annotations

import os

THREADS_ENV_VAR = "GRIDCOHER_THREADS"


def thread_count() -> int:
    """Worker cap from the GRIDCOHER_THREADS environment variable.

    Defaults to 1.  Thread count never changes numerical results, only
    how work is scheduled.
    """
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
