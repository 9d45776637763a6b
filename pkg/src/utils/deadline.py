"""Cooperative wall-clock deadlines for long-running scorers."""

import time
from typing import Optional

from .exceptions import ComputationTimeoutError


class Deadline:
    """A point in time after which ``check()`` raises ComputationTimeoutError.

    Inner loops call ``check()``; only every ``stride``-th call reads the
    clock.
    """

    def __init__(self, timeout_s: Optional[float], stride: int = 256):
        self.timeout_s = timeout_s
        self.stride = max(1, stride)
        self._expires_at = None if timeout_s is None else time.monotonic() + timeout_s
        self._calls = 0

    @classmethod
    def never(cls) -> "Deadline":
        return cls(None)

    def check(self) -> None:
        if self._expires_at is None:
            return
        self._calls += 1
        if self._calls % self.stride == 0 and time.monotonic() >= self._expires_at:
            raise ComputationTimeoutError(
                f"computation exceeded its {self.timeout_s}s budget", timeout_s=self.timeout_s
            )


def ensure_deadline(deadline: Optional[Deadline]) -> Deadline:
    return deadline if deadline is not None else Deadline.never()
