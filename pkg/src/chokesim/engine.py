"""Discrete-event core: virtual clock, priority event queue, seeded RNG stream.

Simulated time is a non-negative float (seconds). Events firing at the same
instant dispatch in insertion order, so replays with a fixed seed are
bit-identical. Cancellation is supported through the handle returned by
``schedule``.
"""

from __future__ import annotations

import random
from enum import IntEnum
from heapq import heappop, heappush
from typing import Callable


class EventKind(IntEnum):
    REGULAR_TICK = 0
    OPTIMISTIC_TICK = 1
    TRANSFER_COMPLETION = 2
    MEASUREMENT_END = 3


# A scheduled event is a mutable heap entry:
#   [fire_at, sequence, cancelled, kind, a, b]
# where a/b are integer payload slots (peer id, counterpart id, ...).
# The entry itself is the cancellation handle.
EventHandle = list

_FIRE_AT = 0
_SEQ = 1
_CANCELLED = 2
_KIND = 3


class SchedulingError(Exception):
    """Raised when an event is scheduled before the current clock."""


class Engine:
    """Event queue plus virtual clock.

    Handlers are registered per event kind and called as
    ``handler(fire_at, a, b)``. Single-threaded; one instance per run.
    """

    def __init__(self) -> None:
        self.now = 0.0
        self.dispatch_count = 0
        self._heap: list[EventHandle] = []
        self._seq = 0
        self._handlers: dict[int, Callable[[float, int, int], None]] = {}

    def register(self, kind: EventKind, handler: Callable[[float, int, int], None]) -> None:
        self._handlers[int(kind)] = handler

    def schedule(self, fire_at: float, kind: EventKind, a: int = 0, b: int = 0) -> EventHandle:
        """Enqueue an event; returns a handle usable with :meth:`cancel`."""
        if fire_at < self.now:
            raise SchedulingError(
                f"cannot schedule {kind.name} at t={fire_at} before clock t={self.now}"
            )
        entry: EventHandle = [fire_at, self._seq, False, int(kind), a, b]
        self._seq += 1
        heappush(self._heap, entry)
        return entry

    @staticmethod
    def cancel(handle: EventHandle) -> None:
        handle[_CANCELLED] = True

    def peek_time(self) -> float | None:
        """Fire time of the next live event, or None if the queue is drained."""
        heap = self._heap
        while heap and heap[0][_CANCELLED]:
            heappop(heap)
        return heap[0][_FIRE_AT] if heap else None

    def run_until(self, horizon: float) -> tuple[int, bool]:
        """Dispatch every event with fire_at <= horizon, in order.

        Returns (number of events dispatched, queue-exhausted flag). The
        clock advances only on dispatch; an empty queue leaves it unchanged.
        """
        heap = self._heap
        handlers = self._handlers
        dispatched = 0
        while heap:
            entry = heap[0]
            if entry[_FIRE_AT] > horizon:
                break
            heappop(heap)
            if entry[_CANCELLED]:
                continue
            t = entry[_FIRE_AT]
            assert t >= self.now, "event queue violated clock monotonicity"
            self.now = t
            dispatched += 1
            handlers[entry[_KIND]](t, entry[4], entry[5])
        self.dispatch_count += dispatched
        return dispatched, not heap


class RngStream:
    """Deterministic pseudo-random stream for one run.

    Wraps a Mersenne-Twister generator seeded once; the same seed yields the
    identical draw sequence on every platform. All randomness in a run
    (tie-breaks, optimistic picks, tracker lists) must come from one stream.
    """

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._rng = random.Random(seed)

    def draw_uniform(self, n: int) -> int:
        """Uniform index in [0, n). n must be >= 1."""
        if n < 1:
            raise ValueError(f"draw_uniform requires n >= 1, got {n}")
        return self._rng.randrange(n)

    def random(self) -> float:
        return self._rng.random()

    def sample(self, items: list, k: int) -> list:
        """k distinct items, uniformly, via partial Fisher-Yates.

        Implemented over draw_uniform only so the draw pattern does not
        depend on stdlib sampling internals.
        """
        arr = list(items)
        n = len(arr)
        if k > n:
            raise ValueError(f"cannot sample {k} from {n} items")
        for i in range(k):
            j = i + self.draw_uniform(n - i)
            arr[i], arr[j] = arr[j], arr[i]
        return arr[:k]
