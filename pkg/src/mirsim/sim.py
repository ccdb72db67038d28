"""Deterministic event scheduler that owns the simulation clock.

Everything in a run that happens "at a time" goes through one of these:
firmware and plant ticks, sensor emissions, teleop publishing, scripted
joystick events, recorder flushes. Tasks fire in (time, priority,
registration order) order, so two tasks due at the same instant always
run in the same sequence and a run is reproducible event for event.

Periodic tasks compute their k-th due time as first + k * period rather
than accumulating additions, so a million ticks land exactly where
float arithmetic puts k * period and cadences never drift apart.

Realtime pacing is an optional sleep layer on top: before dispatching
an event the scheduler waits until the corresponding wall-clock instant.
It changes when events run, never in what order or with what clock
values, so a paced run computes the same trajectory as a flat-out one.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Callable

TaskFn = Callable[[float], None]

# Dispatch slots for the standard bringup, spread out so the data flow
# within one instant follows the physical flow: inputs first, then the
# control/plant step, then recording, then anything talking to the
# outside world.
PRIORITY_INPUT = 5
PRIORITY_SENSORS = 10
PRIORITY_TELEOP = 20
PRIORITY_CONTROL = 30
PRIORITY_DAQ = 40
PRIORITY_BRIDGE = 50


@dataclass(order=True)
class _Entry:
    due: float
    priority: int
    order: int
    task: "Task" = field(compare=False)


class Task:
    """Handle for one scheduled callable; cancel() to stop it firing."""

    __slots__ = (
        "fn", "name", "period", "anchor", "index0", "serial", "fires", "cancelled",
    )

    def __init__(
        self,
        fn: TaskFn,
        name: str,
        period: float | None,
        anchor: float,
        index0: int = 0,
    ) -> None:
        self.fn = fn
        self.name = name
        self.period = period
        self.anchor = anchor
        self.index0 = index0
        self.serial = 0
        self.fires = 0
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True

    def next_due(self) -> float:
        """Due time of the next firing (periodic tasks only).

        anchor + k * period in one multiply, never a running sum, so the
        k-th firing of a 1 kHz task lands on the same float another 1 kHz
        task computes for its k-th.
        """
        assert self.period is not None
        return self.anchor + (self.index0 + self.fires) * self.period

    def __repr__(self) -> str:
        kind = "periodic" if self.period is not None else "one-shot"
        return f"Task({self.name!r}, {kind}, fires={self.fires})"


class Scheduler:
    """Priority-queue event loop over simulated time.

    now starts at 0.0 and only ever moves forward, jumping directly
    from one event to the next. With realtime=True, run_until() paces
    dispatch against time.monotonic so one simulated second takes one
    wall second (a scale factor adjusts that for replay-style uses).
    """

    def __init__(self, *, realtime: bool = False, rate: float = 1.0) -> None:
        if not rate > 0.0:
            raise ValueError("rate must be positive")
        self.realtime = realtime
        self.rate = rate
        self.now = 0.0
        self._heap: list[_Entry] = []
        self._order = 0
        self._stop = False

    # -- registration ------------------------------------------------------

    def call_at(
        self,
        due: float,
        fn: TaskFn,
        *,
        name: str = "one-shot",
        priority: int = PRIORITY_CONTROL,
    ) -> Task:
        """Run fn(now) once at the given simulation time."""
        if not math.isfinite(due):
            raise ValueError("due time must be finite")
        if due < self.now:
            raise ValueError(
                f"cannot schedule {name!r} at {due}, clock is at {self.now}"
            )
        task = Task(fn, name, None, due)
        self._push(due, priority, task)
        return task

    def defer(
        self,
        fn: TaskFn,
        *,
        name: str = "deferred",
        priority: int = PRIORITY_CONTROL,
    ) -> Task:
        """Run fn(now) at the current clock, after already-queued peers."""
        return self.call_at(self.now, fn, name=name, priority=priority)

    def every(
        self,
        period: float,
        fn: TaskFn,
        *,
        name: str = "periodic",
        priority: int = PRIORITY_CONTROL,
        first: float | None = None,
    ) -> Task:
        """Run fn(now) at first, first+period, first+2*period, ...

        first defaults to one period after the current clock, so a task
        registered at t=0 with period 0.02 fires at 0.02, 0.04, ...
        """
        if not period > 0.0 or not math.isfinite(period):
            raise ValueError("period must be positive and finite")
        if first is None:
            anchor, index0 = self.now, 1
        else:
            anchor, index0 = first, 0
        start = anchor + index0 * period
        if start < self.now:
            raise ValueError(
                f"cannot schedule {name!r} at {start}, clock is at {self.now}"
            )
        task = Task(fn, name, period, anchor, index0)
        self._push(start, priority, task)
        return task

    def _push(self, due: float, priority: int, task: Task) -> None:
        # Ties on (due, priority) resolve by registration order, which is
        # stamped on the task once; a periodic task keeps its slot relative
        # to its peers across repushes.
        if task.serial == 0:
            self._order += 1
            task.serial = self._order
        heapq.heappush(self._heap, _Entry(due, priority, task.serial, task))

    # -- execution ---------------------------------------------------------

    def stop(self) -> None:
        """Make the current run_* call return after the active event."""
        self._stop = True

    @property
    def pending(self) -> int:
        return sum(1 for e in self._heap if not e.task.cancelled)

    def step(self) -> bool:
        """Dispatch the single next event; False if the queue is empty."""
        while self._heap:
            entry = heapq.heappop(self._heap)
            task = entry.task
            if task.cancelled:
                continue
            self.now = entry.due
            task.fires += 1
            if task.period is not None:
                self._push(task.next_due(), entry.priority, task)
            task.fn(entry.due)
            return True
        return False

    def run_until(self, t_end: float) -> None:
        """Dispatch every event due at or before t_end, then set now = t_end.

        Honors stop(); with realtime pacing, sleeps ahead of each event
        so dispatch tracks the wall clock at the configured rate.
        """
        if t_end < self.now:
            raise ValueError(f"t_end {t_end} is before current time {self.now}")
        self._stop = False
        anchor_wall = time.monotonic()
        anchor_sim = self.now
        while not self._stop:
            entry = self._next_live()
            if entry is None or entry.due > t_end:
                break
            if self.realtime:
                self._pace(entry.due, anchor_wall, anchor_sim)
            heapq.heappop(self._heap)
            task = entry.task
            self.now = entry.due
            task.fires += 1
            if task.period is not None:
                self._push(task.next_due(), entry.priority, task)
            task.fn(entry.due)
        if not self._stop:
            if self.realtime:
                self._pace(t_end, anchor_wall, anchor_sim)
            self.now = max(self.now, t_end)

    def run_for(self, duration: float) -> None:
        if duration < 0.0:
            raise ValueError("duration must be non-negative")
        self.run_until(self.now + duration)

    def _next_live(self) -> _Entry | None:
        while self._heap:
            head = self._heap[0]
            if head.task.cancelled:
                heapq.heappop(self._heap)
                continue
            return head
        return None

    def _pace(self, due: float, anchor_wall: float, anchor_sim: float) -> None:
        target = anchor_wall + (due - anchor_sim) / self.rate
        while not self._stop:
            remaining = target - time.monotonic()
            if remaining <= 0.0:
                return
            # Short naps keep stop() responsive from other threads.
            time.sleep(min(remaining, 0.02))


__all__ = [
    "PRIORITY_INPUT",
    "PRIORITY_SENSORS",
    "PRIORITY_TELEOP",
    "PRIORITY_CONTROL",
    "PRIORITY_DAQ",
    "PRIORITY_BRIDGE",
    "Task",
    "Scheduler",
]
