"""Litmus tests for the happens-before detector.

Threads run one after another (thread 0 to completion, then thread 1, ...),
so every test reads the value it is meant to read and only the ordering
annotations decide whether the plain accesses race.
"""
import pytest

from centralk.atomics import ACQ_REL, ACQUIRE, RELAXED, RELEASE, SEQ_CST


class Data:
    pass


def message_passing(c, store_order, load_order, fence_before=None, fence_after=None):
    flag = c.rt.atomic(0, "flag")
    data = Data()

    def writer():
        c.tracer.write(data, "x", "writer")
        if fence_before:
            c.rt.fence(fence_before)
        flag.store(1, store_order)

    def reader():
        assert flag.load(load_order) == 1
        if fence_after:
            c.rt.fence(fence_after)
        c.tracer.read(data, "x", "reader")

    return c.run(writer, reader)


@pytest.mark.parametrize("store,load,expect_race", [
    (RELEASE, ACQUIRE, False),
    (SEQ_CST, SEQ_CST, False),
    (RELAXED, ACQUIRE, True),
    (RELEASE, RELAXED, True),
    (RELAXED, RELAXED, True),
])
def test_message_passing(controlled, store, load, expect_race):
    races = message_passing(controlled(), store, load)
    assert bool(races) == expect_race
    if races:
        assert races[0].kind == "write-read" and races[0].location == "Data.x"


def test_fence_fence_synchronization(controlled):
    assert not message_passing(controlled(), RELAXED, RELAXED, RELEASE, ACQUIRE)


def test_release_fence_alone_is_not_enough(controlled):
    assert message_passing(controlled(), RELAXED, RELAXED, fence_before=RELEASE)


def test_acquire_fence_after_relaxed_load(controlled):
    assert not message_passing(controlled(), RELEASE, RELAXED, fence_after=ACQUIRE)


def three_threads(c, middle):
    flag = c.rt.atomic(0, "flag")
    data = Data()

    def t0():
        c.tracer.write(data, "x", "t0")
        flag.store(1, RELEASE)

    def t2():
        assert flag.load(ACQUIRE) >= 1
        c.tracer.read(data, "x", "t2")

    return c.run(t0, lambda: middle(flag), t2)


def test_rmw_continues_release_sequence(controlled):
    assert not three_threads(controlled(), lambda f: f.fetch_add(1, RELAXED))


def test_foreign_relaxed_store_ends_release_sequence(controlled):
    assert three_threads(controlled(), lambda f: f.store(2, RELAXED))


def test_acq_rel_rmw_chains_two_writers(controlled):
    c = controlled()
    count = c.rt.atomic(2, "count")
    data = Data()

    def t0():
        c.tracer.read(data, "x", "t0")
        count.fetch_sub(1, ACQ_REL)

    def t1():
        assert count.fetch_sub(1, ACQ_REL) == 1
        c.tracer.write(data, "x", "t1")

    assert not c.run(t0, t1)


def test_relaxed_rmw_does_not_order_earlier_reads(controlled):
    c = controlled()
    count = c.rt.atomic(2, "count")
    data = Data()

    def t0():
        c.tracer.read(data, "x", "t0")
        count.fetch_sub(1, RELAXED)

    def t1():
        assert count.fetch_sub(1, RELAXED) == 1
        c.tracer.write(data, "x", "t1")

    races = c.run(t0, t1)
    assert [r.kind for r in races] == ["read-write"]


def test_seq_cst_fences_order_each_other(controlled):
    c = controlled()
    data = Data()

    def t0():
        c.tracer.write(data, "x", "t0")
        c.rt.fence(SEQ_CST)

    def t1():
        c.rt.fence(SEQ_CST)
        c.tracer.read(data, "x", "t1")

    assert not c.run(t0, t1)


def test_thread_start_and_join_are_edges(controlled):
    c = controlled()
    data = Data()
    c.tracer.write(data, "x", "main-before")
    c.run(lambda: c.tracer.write(data, "x", "child"))
    c.tracer.read(data, "x", "main-after")
    assert not c.tracer.races


def test_races_are_deduplicated(controlled):
    c = controlled()
    data = Data()

    def w(site):
        for _ in range(3):
            c.tracer.write(data, "x", site)
            c.sched.point()

    races = c.run(lambda: w("a"), lambda: w("b"))
    assert len(races) == 1
