"""Executable checks of the storage's concurrency claims.

* :func:`stress` has every thread push uniquely tagged items and pop until
  all of them are consumed, then audits exactly-once consumption, the fill
  guarantee over ``[0, tail)``, single cleanup per block epoch and tail
  monotonicity.
* :func:`differential` runs one scenario under two configurations and
  compares functional outputs.
* :func:`lifecycle_audit` drives blocks through many reuse epochs and checks
  their shadow histories.
* :func:`explore_races` runs small two-thread scenarios under the controlled
  scheduler with the race detector attached.
"""
from __future__ import annotations

import collections
import dataclasses
import itertools
import threading
import time

from .atomics import Runtime
from .audit import Audit
from .config import StorageConfig
from .interleave import ControlledScheduler, RandomChooser, explore
from .item import Strategy
from .place import EMPTY, Place
from .rng import py_random
from .storage import GlobalTaskStorage
from .tracing import Tracer, spawn_threads


class AuditFailure(AssertionError):
    pass


@dataclasses.dataclass
class StressReport:
    threads: int
    items_per_thread: int
    k: int
    block_size: int
    ordering: str
    handshake: str
    pushed: int = 0
    popped: int = 0
    duplicates: int = 0
    lost: int = 0
    final_tail: int = 0
    max_spin: int = 0
    blocks_allocated: int = 0
    blocks_reused: int = 0
    blocks_linked: int = 0
    heap_discards: int = 0
    cleanups: int = 0
    runtime_s: float = 0.0
    flags: dict = dataclasses.field(default_factory=dict)
    problems: list = dataclasses.field(default_factory=list)
    payloads: collections.Counter = dataclasses.field(default_factory=collections.Counter, repr=False)

    @property
    def passed(self) -> bool:
        return self.duplicates == 0 and self.lost == 0 and all(self.flags.values())

    def raise_on_failure(self) -> None:
        if not self.passed:
            raise AuditFailure(self.summary())

    def summary(self) -> str:
        bad = [name for name, ok in self.flags.items() if not ok]
        lines = [f"stress threads={self.threads} items={self.items_per_thread} k={self.k} "
                 f"B={self.block_size} {self.ordering}/{self.handshake}: "
                 f"pushed={self.pushed} popped={self.popped} dup={self.duplicates} "
                 f"lost={self.lost} failed={bad}"]
        lines.extend(self.problems[:20])
        return "\n".join(lines)


def audit_storage(storage: GlobalTaskStorage, places, audit: Audit, report: StressReport) -> None:
    """Fill the invariant flags of ``report`` from the shadow audit."""
    tail = storage.tail.load()
    report.final_tail = tail
    pubs = audit.publications
    missing = [i for i in range(tail) if pubs.get(i, 0) == 0]
    twice = [i for i, c in pubs.items() if c > 1]
    report.flags["fill_guarantee"] = not missing
    report.flags["single_publication"] = not twice
    if missing:
        report.problems.append(f"indices below tail {tail} never published: {missing[:10]}")
    if twice:
        report.problems.append(f"indices published more than once: {twice[:10]}")

    cleanups = audit.cleanups
    multi_clean = {key: c for key, c in cleanups.items() if c != 1}
    report.flags["single_cleanup_per_epoch"] = not multi_clean
    if multi_clean:
        report.problems.append(f"blocks cleaned more than once in one epoch: {multi_clean}")
    report.cleanups = sum(cleanups.values())

    # a block epoch is cleaned iff every place deregistered it exactly once
    per_epoch = collections.defaultdict(list)
    for (pid, uid, epoch), c in audit.deregistrations.items():
        per_epoch[(uid, epoch)].append((pid, c))
    bad_dereg = []
    for key, entries in per_epoch.items():
        if any(c != 1 for _, c in entries):
            bad_dereg.append((key, entries))
        cleaned = cleanups.get(key, 0) == 1
        if cleaned != (len(entries) == storage.num_places):
            bad_dereg.append((key, entries, "cleaned" if cleaned else "not cleaned"))
    report.flags["deregister_once_per_place"] = not bad_dereg
    if bad_dereg:
        report.problems.append(f"deregistration anomalies: {bad_dereg[:5]}")

    tail_problems = audit.tail_chain_problems(tail)
    report.flags["tail_monotonic"] = not tail_problems
    report.problems.extend(tail_problems[:5])
    report.flags["head_le_tail"] = all(p.head <= tail for p in places)
    report.max_spin = audit.max_spin
    report.blocks_allocated = sum(len(p.block_pool) for p in places)
    total = sum((p.counters for p in places[1:]), places[0].counters)
    report.blocks_reused = total.blocks_reused
    report.blocks_linked = total.blocks_linked
    report.heap_discards = total.heap_discards


def _check_payloads(report: StressReport, expected, popped) -> None:
    counts = collections.Counter(popped)
    report.payloads = counts
    report.popped = len(popped)
    report.duplicates = sum(c - 1 for c in counts.values() if c > 1)
    report.lost = sum(1 for p in expected if p not in counts)
    extra = [p for p in counts if p not in expected]
    report.flags["no_foreign_payloads"] = not extra
    if report.duplicates:
        report.problems.append(f"duplicate takes: {[p for p, c in counts.items() if c > 1][:10]}")
    if report.lost:
        report.problems.append(f"lost items: {[p for p in expected if p not in counts][:10]}")


def stress(threads: int, items_per_thread: int, k: int, block_size: int,
           ordering: str = "relaxed", handshake: str = "acquire", *, seed: int = 0,
           config: StorageConfig | None = None, tracer: Tracer | None = None,
           pop_every: int = 1, timeout: float = 300.0) -> StressReport:
    """Concurrent push/pop of uniquely tagged items, audited at quiescence.

    Each thread pushes ``items_per_thread`` items ``(thread, i)`` with random
    priorities, popping once after every ``pop_every`` pushes, and then keeps
    popping until every pushed item has been consumed somewhere.
    """
    config = config or StorageConfig(block_size=block_size, ordering=ordering,
                                     handshake=handshake, seed=seed)
    audit = Audit(keep_events=False)
    rt = Runtime(config.ordering, tracer=tracer, audit=audit)
    storage = GlobalTaskStorage(threads, config, rt)
    places = [Place(storage, i) for i in range(threads)]
    total = threads * items_per_thread
    consumed = rt.atomic(0, "stress.consumed")
    results = [[] for _ in range(threads)]
    deadline = time.monotonic() + timeout

    def body(tid):
        place = places[tid]
        rng = py_random(seed, "stress-priority", tid)
        out = results[tid]
        mine = 0

        def take():
            payload = place.pop()
            if payload is EMPTY:
                return False
            out.append(payload)
            consumed.fetch_add(1, rt.mo.relaxed)
            return True

        for i in range(items_per_thread):
            place.push(Strategy(rng.random(), k), (tid, i))
            mine += 1
            if mine % pop_every == 0:
                take()
        while consumed.load(rt.mo.relaxed) < total:
            if not take():
                if time.monotonic() > deadline:
                    raise TimeoutError(f"stress thread {tid} gave up waiting for quiescence")
                rt.spin()

    report = StressReport(threads, items_per_thread, k, config.block_size,
                          config.ordering, config.handshake, pushed=total)
    start = time.perf_counter()
    spawn_threads(rt, [lambda t=t: body(t) for t in range(threads)])()
    report.runtime_s = time.perf_counter() - start

    expected = {(t, i) for t in range(threads) for i in range(items_per_thread)}
    _check_payloads(report, expected, [p for r in results for p in r])
    audit_storage(storage, places, audit, report)
    if tracer is not None and tracer.detector is not None:
        report.flags["race_free"] = not tracer.races
        report.problems.extend(str(r) for r in tracer.races[:10])
    return report


def differential(run_a, run_b, scenario) -> bool:
    """Run ``scenario(run)`` for both run descriptions; true iff outputs are equal.

    ``run_a``/``run_b`` are anything ``scenario`` accepts, typically
    :class:`StorageConfig` instances differing in ordering or handshake.
    """
    out_a = scenario(run_a)
    out_b = scenario(run_b)
    if out_a != out_b:
        raise AuditFailure(f"differential mismatch:\n  {run_a}: {_short(out_a)}\n  {run_b}: {_short(out_b)}")
    return True


def _short(value, limit=400):
    text = repr(value)
    return text if len(text) <= limit else text[:limit] + "..."


@dataclasses.dataclass
class LifecycleReport:
    epochs: int
    relinks: int
    cleanups: int
    blocks_allocated: int
    blocks_reused: int
    problems: list

    @property
    def passed(self) -> bool:
        return not self.problems


def check_block_histories(audit: Audit) -> list[str]:
    """Per block: epochs are linked in sequence, each cleaned at most once,
    only after its link, and never relinked before that cleanup; no item is
    published into an epoch that was never linked or after its cleanup.

    Link records are written just after the linking CAS, so another thread
    may log a publication into the fresh block first; publications are
    therefore matched to links by epoch rather than by log position.
    """
    problems = []
    per_block = collections.defaultdict(list)
    for ev in audit.events:
        if ev[0] in ("link", "cleanup", "publish"):
            per_block[ev[1]].append(ev)
    for uid, events in per_block.items():
        link_epochs = [ev[2] for ev in events if ev[0] == "link"]
        if link_epochs != list(range(len(link_epochs))):
            problems.append(f"block {uid}: link epochs {link_epochs[:10]} are not 0, 1, 2, ...")
        linked_epochs = set(link_epochs)
        linked, cleaned = set(), set()
        for ev in events:
            kind, epoch = ev[0], ev[2]
            if kind == "link":
                if epoch > 0 and epoch - 1 not in cleaned:
                    problems.append(f"block {uid}: relinked for epoch {epoch} before cleanup of {epoch - 1}")
                linked.add(epoch)
            elif kind == "cleanup":
                if epoch not in linked:
                    problems.append(f"block {uid}: epoch {epoch} cleaned before it was linked")
                if epoch in cleaned:
                    problems.append(f"block {uid}: epoch {epoch} cleaned twice")
                cleaned.add(epoch)
            elif kind == "publish":
                if epoch not in linked_epochs:
                    problems.append(f"block {uid}: publication into never-linked epoch {epoch}")
                if epoch in cleaned:
                    problems.append(f"block {uid}: publication into epoch {epoch} after its cleanup")
    return problems


def lifecycle_audit(block_size: int = 2, threads: int = 2, epochs: int = 100, *,
                    k: int = 0, ordering: str = "relaxed", handshake: str = "acquire",
                    seed: int = 0, max_rounds: int = 100_000) -> LifecycleReport:
    """Cycle blocks through at least ``epochs`` cleanups and audit their histories.

    Threads advance in lock-step rounds (one push and one pop each per round)
    so that no place lags far behind; that keeps the number of blocks any
    place must hold bounded and makes reuse observable.
    """
    config = StorageConfig(block_size=block_size, ordering=ordering, handshake=handshake, seed=seed)
    audit = Audit(keep_events=True)
    rt = Runtime(ordering, audit=audit)
    storage = GlobalTaskStorage(threads, config, rt)
    places = [Place(storage, i) for i in range(threads)]
    barrier = threading.Barrier(threads)
    stop = threading.Event()
    pushed = collections.Counter()
    popped = [[] for _ in range(threads)]

    def enough():
        return sum(audit.cleanups.values()) >= epochs

    def body(tid):
        place = places[tid]
        for r in range(max_rounds):
            place.push(Strategy(0, k), (tid, r))
            pushed[tid] += 1
            payload = place.pop()
            if payload is not EMPTY:
                popped[tid].append(payload)
            if barrier.wait() == 0 and enough():
                stop.set()
            barrier.wait()
            if stop.is_set():
                return

    spawn_threads(rt, [lambda t=t: body(t) for t in range(threads)])()
    # drain sequentially so every item is accounted for
    for _ in range(2):
        for tid, place in enumerate(places):
            while (payload := place.pop()) is not EMPTY:
                popped[tid].append(payload)

    problems = check_block_histories(audit)
    everything = [p for r in popped for p in r]
    if len(everything) != len(set(everything)):
        problems.append("an item was popped twice")
    if len(everything) != sum(pushed.values()):
        problems.append(f"popped {len(everything)} of {sum(pushed.values())} items")
    relinks = sum(1 for ev in audit.events if ev[0] == "link" and ev[2] > 0)
    total_reused = sum(p.counters.blocks_reused for p in places)
    cleanups = sum(audit.cleanups.values())
    if cleanups < epochs:
        problems.append(f"only {cleanups} cleanups in {max_rounds} rounds")
    return LifecycleReport(epochs=cleanups, relinks=relinks, cleanups=cleanups,
                           blocks_allocated=sum(len(p.block_pool) for p in places),
                           blocks_reused=total_reused, problems=problems)


# -- interleaving exploration ----------------------------------------------------

@dataclasses.dataclass(frozen=True)
class Scenario:
    """Two-thread scenario: sequential setup ops, then concurrent ops per thread.

    Ops are ``"push"`` or ``"pop"``; setup entries are ``(place, op)``.
    """

    name: str
    setup: tuple
    ops: tuple
    k: int = 0

    @property
    def concurrent_ops(self) -> int:
        return sum(len(o) for o in self.ops)


SMALL_SCENARIOS = (
    Scenario("push-vs-pop", (), (("push", "push", "push"), ("pop", "pop", "pop")), k=0),
    Scenario("both-push-pop", (), (("push", "pop", "push"), ("push", "pop", "pop")), k=1),
    Scenario("link-race", ((0, "push"),), (("push", "push", "pop"), ("push", "push", "pop")), k=0),
    Scenario("reuse-after-drain",
             ((0, "push"), (0, "push"), (1, "pop"), (0, "pop")),
             (("push", "pop", "push"), ("push", "pop", "pop")), k=1),
    Scenario("k2-window", ((1, "push"),), (("push", "push", "pop"), ("pop", "push", "pop")), k=2),
)


class ScenarioFailure(AssertionError):
    pass


def run_scenario(scenario: Scenario, chooser, config: StorageConfig,
                 spurious_rate: float = 0.0, seed: int = 0) -> Tracer:
    """Execute one schedule of ``scenario``; raise on any failed audit."""
    sched = ControlledScheduler(chooser, max_steps=20_000)
    tracer = Tracer(scheduler=sched, spurious_rate=spurious_rate, seed=seed)
    audit = Audit(keep_events=True)
    rt = Runtime(config.ordering, tracer=tracer, audit=audit)
    storage = GlobalTaskStorage(2, config, rt)
    places = [Place(storage, 0), Place(storage, 1)]
    tags = itertools.count()
    pushed, got = [], []

    def do(place, op):
        if op == "push":
            tag = next(tags)
            pushed.append(tag)
            place.push(Strategy(tag % 3, scenario.k), tag)
        else:
            payload = place.pop()
            if payload is not EMPTY:
                got.append(payload)

    for pid, op in scenario.setup:
        do(places[pid], op)
    sched.run([lambda ops=ops, p=p: [do(p, op) for op in ops]
               for ops, p in zip(scenario.ops, places)], tracer=tracer)
    for _ in range(2):
        for place in places:
            while (payload := place.pop()) is not EMPTY:
                got.append(payload)

    problems = []
    if sorted(got) != sorted(pushed):
        problems.append(f"pushed {sorted(pushed)} but popped {sorted(got)}")
    report = StressReport(2, 0, scenario.k, config.block_size, config.ordering, config.handshake)
    audit_storage(storage, places, audit, report)
    problems.extend(report.problems)
    problems.extend(check_block_histories(audit))
    problems.extend(str(r) for r in tracer.races)
    if problems:
        raise ScenarioFailure(f"{scenario.name}: " + "; ".join(problems))
    return tracer


@dataclasses.dataclass
class RaceExploration:
    config: StorageConfig
    schedules: int
    failures: list
    exhaustive: bool

    @property
    def passed(self) -> bool:
        return not self.failures

    def distinct_failures(self) -> list[str]:
        """Unique problem descriptions across all failed schedules."""
        seen = []
        for failure in self.failures:
            text = str(failure).split(": ", 1)[-1]
            for part in text.split("; "):
                if part not in seen:
                    seen.append(part)
        return seen


def explore_races(config: StorageConfig, scenarios=SMALL_SCENARIOS, bound: int = 2,
                  random_schedules: int = 0, seed: int = 0,
                  spurious_rate: float = 0.0) -> RaceExploration:
    """Preemption-bounded exhaustive exploration (plus optional random schedules)."""
    total = 0
    failures = []
    exhaustive = True
    for scenario in scenarios:
        result = explore(lambda chooser, s=scenario: run_scenario(
            s, chooser, config, spurious_rate=spurious_rate, seed=seed), bound=bound)
        total += result.schedules
        exhaustive &= result.exhausted
        failures.extend(exc for _, exc in result.failures)
        for i in range(random_schedules):
            total += 1
            try:
                run_scenario(scenario, RandomChooser(seed * 1_000_003 + i), config,
                             spurious_rate=spurious_rate, seed=i)
            except AssertionError as exc:
                failures.append(exc)
    return RaceExploration(config, total, failures, exhaustive)
