"""
Timer class for when you need the time elapsed in seconds, plus timezone-aware timestamps for events.
"""

import datetime
import time
from typing import Optional


def utc_now() -> datetime.datetime:
    """
    Return the current time for timezone UTC.
    """
    return datetime.datetime.now(datetime.timezone.utc)


class Timer:

    """
    Context manager class to measure elapsed time in seconds using the monotonic performance counter.

    Outside of a context, the timer runs from its creation.

    >>> with Timer() as t:
    ...     pass
    ...
    >>> str(t)
    '0.00s'
    >>> t.elapsed < 1.0
    True
    """

    def __init__(self) -> None:
        self._start = time.perf_counter()
        self._end = None  # type: Optional[float]

    def __enter__(self):
        self._start = time.perf_counter()
        self._end = None
        return self

    def __exit__(self, exc_type, exc_value, exc_traceback):
        self._end = time.perf_counter()

    def __str__(self):
        # The instances describe the elapsed time, not themselves.
        return "%.2fs" % self.elapsed

    @property
    def elapsed(self) -> float:
        """Return elapsed seconds (until end of context or until now while still running)"""
        end = self._end if self._end is not None else time.perf_counter()
        return end - self._start
