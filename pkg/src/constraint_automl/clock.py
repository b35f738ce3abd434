"""Clocks used for time budgets and timing measurements.

Every timed code path accepts a ``clock`` callable returning seconds as a
float. Production code uses :func:`time.perf_counter`; tests inject a
:class:`TickClock` so that budgets and measured times are reproducible.
"""
from __future__ import annotations

import threading
import time
from typing import Callable

Clock = Callable[[], float]

default_clock: Clock = time.perf_counter


class TickClock:
    """Virtual clock that advances by a fixed ``step`` on every reading."""

    def __init__(self, step: float = 0.001, start: float = 0.0):
        if step < 0:
            raise ValueError("step must be non-negative")
        self.step = float(step)
        self._now = float(start)
        self._lock = threading.Lock()

    def __call__(self) -> float:
        with self._lock:
            now = self._now
            self._now += self.step
            return now

    def advance(self, seconds: float) -> None:
        with self._lock:
            self._now += float(seconds)

    def peek(self) -> float:
        return self._now
