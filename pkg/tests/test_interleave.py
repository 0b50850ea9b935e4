import pytest

from centralk.atomics import RELAXED, Runtime
from centralk.interleave import ControlledScheduler, PrefixChooser, RandomChooser, ScheduleError, explore
from centralk.tracing import Tracer


def lost_update(chooser, record=None):
    sched = ControlledScheduler(chooser, timeout=10)
    tr = Tracer(detect_races=False, scheduler=sched)
    counter = Runtime(tracer=tr).atomic(0, "counter")

    def incr():
        v = counter.load(RELAXED)
        counter.store(v + 1, RELAXED)

    sched.run([incr, incr], tracer=tr)
    if record is not None:
        record.append(counter.load())
    if counter.load() != 2:
        raise AssertionError("lost update")


def test_no_preemption_runs_threads_in_turn():
    assert explore(lost_update, bound=0).ok


def test_one_preemption_finds_lost_update():
    result = explore(lost_update, bound=1)
    assert result.exhausted and not result.ok
    prefix, exc = result.failures[0]
    # replaying the failing prefix reproduces the failure
    with pytest.raises(AssertionError):
        lost_update(PrefixChooser(prefix))


def test_exhaustive_search_covers_every_interleaving():
    orders = set()

    def scenario(chooser):
        sched = ControlledScheduler(chooser, timeout=10)
        tr = Tracer(detect_races=False, scheduler=sched)
        cell = Runtime(tracer=tr).atomic(0, "cell")
        log = []

        def body(name):
            cell.load(RELAXED)
            log.append(name + "1")
            cell.load(RELAXED)
            log.append(name + "2")

        sched.run([lambda: body("a"), lambda: body("b")], tracer=tr)
        orders.add(tuple(log))

    result = explore(scenario, bound=2)
    assert result.exhausted
    # two threads of two steps each interleave in C(4, 2) = 6 ways
    assert len(orders) == 6


def test_random_chooser_is_reproducible():
    def outcome(seed):
        got = []
        for i in range(30):
            try:
                lost_update(RandomChooser(seed * 100 + i, switch_prob=0.5), got)
            except AssertionError:
                pass
        return got

    assert outcome(1) == outcome(1)
    assert 1 in outcome(1)


def test_spin_with_no_other_thread_is_an_error():
    sched = ControlledScheduler(PrefixChooser(), timeout=10)
    tr = Tracer(detect_races=False, scheduler=sched)
    with pytest.raises(ScheduleError):
        sched.run([lambda: tr.spin()], tracer=tr)


def test_spin_yields_to_the_thread_being_waited_for():
    sched = ControlledScheduler(PrefixChooser(), timeout=10)
    tr = Tracer(detect_races=False, scheduler=sched)
    flag = Runtime(tracer=tr).atomic(False, "flag")

    def waiter():
        while not flag.load(RELAXED):
            tr.spin()

    sched.run([waiter, lambda: flag.store(True, RELAXED)], tracer=tr)
    assert flag.load()
