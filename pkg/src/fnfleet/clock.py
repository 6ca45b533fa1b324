"""Clock abstraction: wall time for production, virtual time for simulation.

Timestamps are seconds as floats. Virtual time starts at 0.0 and only
moves when explicitly advanced, which keeps simulated runs deterministic.
"""

from __future__ import annotations

import threading
import time


class Clock:
    """Time source contract used by every component that reads time."""

    def now(self) -> float:
        raise NotImplementedError

    def sleep(self, seconds: float) -> None:
        raise NotImplementedError


class WallClock(Clock):
    """Real time."""

    def now(self) -> float:
        return time.time()

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


class VirtualClock(Clock):
    """Manually advanced clock; sleep() advances time instead of blocking.

    Monotone by construction: advance() refuses to move backwards.
    """

    def __init__(self, start: float = 0.0):
        self._now = float(start)
        self._lock = threading.Lock()
        self.sleeps: list[float] = []

    def now(self) -> float:
        with self._lock:
            return self._now

    def advance(self, seconds: float) -> float:
        if seconds < 0:
            raise ValueError("virtual clock cannot move backwards")
        with self._lock:
            self._now += seconds
            return self._now

    def advance_to(self, t: float) -> float:
        with self._lock:
            if t < self._now:
                raise ValueError(
                    f"virtual clock cannot move backwards ({t} < {self._now})"
                )
            self._now = float(t)
            return self._now

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)
        self.advance(max(seconds, 0.0))
