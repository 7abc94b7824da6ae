"""Millisecond clocks: wall for live runs, virtual for deterministic tests."""

from __future__ import annotations

import time


class WallClock:
    """Monotonic milliseconds since construction."""

    def __init__(self):
        self._t0 = time.monotonic()

    def now_ms(self) -> int:
        return int((time.monotonic() - self._t0) * 1000)


class VirtualClock:
    """Clock advanced programmatically; time only moves when told to."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def advance_to(self, t_ms: int) -> None:
        if t_ms < self._now:
            raise ValueError(f"virtual clock cannot go backward ({t_ms} < {self._now})")
        self._now = t_ms

    def advance_by(self, dt_ms: int) -> None:
        self.advance_to(self._now + dt_ms)
