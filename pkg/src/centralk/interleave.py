"""Controlled thread scheduling for interleaving exploration.

Managed threads run one at a time.  Every traced atomic access is a
scheduling point at which a *chooser* picks the thread that continues, so a
schedule is fully described by the sequence of choices.  Two choosers are
provided: :class:`RandomChooser` for seeded random schedules and
:class:`PrefixChooser`, which replays a choice prefix and then runs without
preemption.  :func:`explore` drives the latter through every schedule with
at most ``bound`` preemptions (a preemption is a switch away from a thread
that could have continued; switches at spin-waits and thread exits are free).
"""
from __future__ import annotations

import dataclasses
import random
import threading

from .tracing import spawn_threads


class ScheduleError(RuntimeError):
    """The controlled run could not make progress."""


class RandomChooser:
    def __init__(self, seed: int = 0, switch_prob: float = 0.3):
        self._rng = random.Random(seed)
        self.switch_prob = switch_prob

    def choose(self, current, enabled, kind):
        if kind == "point":
            if self._rng.random() >= self.switch_prob or len(enabled) == 1:
                return current
            return self._rng.choice([e for e in enabled if e != current])
        return self._rng.choice(enabled)


class PrefixChooser:
    """Replays ``prefix`` and defaults to "keep running" afterwards.

    Choices are indices into an option list whose first entry is always the
    non-preempting option.  ``trace`` records ``(kind, n_options, index)``
    for every decision.
    """

    def __init__(self, prefix=()):
        self.prefix = list(prefix)
        self.trace: list[tuple[str, int, int]] = []

    def choose(self, current, enabled, kind):
        if kind == "point":
            options = [current] + [e for e in enabled if e != current]
        else:
            options = sorted(enabled)
        d = len(self.trace)
        idx = self.prefix[d] if d < len(self.prefix) else 0
        if idx >= len(options):
            raise ScheduleError(f"schedule diverged at decision {d}")
        self.trace.append((kind, len(options), idx))
        return options[idx]


class ControlledScheduler:
    def __init__(self, chooser, max_steps: int = 100_000, timeout: float = 60.0):
        self.chooser = chooser
        self.max_steps = max_steps
        self.timeout = timeout
        self._local = threading.local()
        self.steps = 0

    def run(self, targets, tracer=None) -> None:
        """Run ``targets`` to completion under this scheduler.

        Exceptions raised inside a target are re-raised here after all
        managed threads have finished.
        """
        n = len(targets)
        self._sems = [threading.Semaphore(0) for _ in range(n)]
        self._alive = [True] * n
        self._done = threading.Event()
        self._aborted = False
        self.steps = 0

        def body(i, fn):
            self._local.index = i
            self._sems[i].acquire()
            try:
                if not self._aborted:
                    fn()
            finally:
                self._finish(i)

        join = spawn_threads(None, [lambda i=i, fn=fn: body(i, fn) for i, fn in enumerate(targets)],
                             tracer=tracer)
        if n == 0:
            join()
            return
        first = self.chooser.choose(None, list(range(n)), "start")
        self._sems[first].release()
        if not self._done.wait(self.timeout):
            self._aborted = True
            for s in self._sems:
                s.release()
            raise ScheduleError("controlled run timed out")
        join()

    def _index(self):
        return getattr(self._local, "index", None)

    def _handoff(self, me, nxt):
        if nxt == me:
            return
        self._sems[nxt].release()
        self._sems[me].acquire()
        if self._aborted:
            raise ScheduleError("aborted")

    def point(self) -> None:
        me = self._index()
        if me is None:
            return
        self.steps += 1
        if self.steps > self.max_steps:
            raise ScheduleError(f"more than {self.max_steps} scheduling points")
        enabled = [j for j, a in enumerate(self._alive) if a]
        self._handoff(me, self.chooser.choose(me, enabled, "point"))

    def spin(self) -> None:
        me = self._index()
        if me is None:
            return
        self.steps += 1
        if self.steps > self.max_steps:
            raise ScheduleError(f"more than {self.max_steps} scheduling points")
        others = [j for j, a in enumerate(self._alive) if a and j != me]
        if not others:
            raise ScheduleError(f"thread {me} spins with no other thread left to run")
        self._handoff(me, self.chooser.choose(me, others, "yield"))

    def _finish(self, me):
        self._alive[me] = False
        enabled = [j for j, a in enumerate(self._alive) if a]
        if not enabled:
            self._done.set()
            return
        self._sems[self.chooser.choose(None, enabled, "finish")].release()


@dataclasses.dataclass
class ExplorationResult:
    schedules: int
    failures: list  # (prefix, exception)
    exhausted: bool

    @property
    def ok(self) -> bool:
        return not self.failures


def _preemptions(trace) -> int:
    return sum(1 for kind, _, idx in trace if kind == "point" and idx > 0)


def explore(run_once, bound: int = 2, max_schedules: int = 100_000,
            stop_on_failure: bool = False) -> ExplorationResult:
    """Enumerate every schedule with at most ``bound`` preemptions.

    ``run_once(chooser)`` must build a fresh scenario, execute it under a
    :class:`ControlledScheduler` using ``chooser``, and raise on any failed
    check.  The scenario has to be deterministic given the schedule.
    """
    prefix: list[int] = []
    failures = []
    count = 0
    while count < max_schedules:
        chooser = PrefixChooser(prefix)
        count += 1
        try:
            run_once(chooser)
        except Exception as exc:  # collected, the exploration goes on
            failures.append((list(prefix), exc))
            if stop_on_failure:
                return ExplorationResult(count, failures, False)
        trace = chooser.trace
        nxt = None
        for d in range(len(trace) - 1, -1, -1):
            kind, n_options, idx = trace[d]
            if idx + 1 < n_options:
                used = _preemptions(trace[:d]) + (1 if kind == "point" else 0)
                if used <= bound:
                    nxt = [t[2] for t in trace[:d]] + [idx + 1]
                    break
        if nxt is None:
            return ExplorationResult(count, failures, True)
        prefix = nxt
    return ExplorationResult(count, failures, False)
