import threading

import pytest

from centralk.atomics import (ACQ_REL, ACQUIRE, RELAXED, RELEASE, SEQ_CST, Atomic, OrderingError,
                              Runtime, orderings_for)
from centralk.tracing import Tracer


def test_relaxed_vocabulary_is_identity():
    mo = orderings_for("relaxed")
    assert (mo.relaxed, mo.acquire, mo.release, mo.acq_rel) == (RELAXED, ACQUIRE, RELEASE, ACQ_REL)
    assert not mo.strict


def test_strict_vocabulary_maps_everything_to_seq_cst():
    mo = orderings_for("strict")
    assert {mo.relaxed, mo.acquire, mo.release, mo.acq_rel, mo.seq_cst} == {SEQ_CST}
    assert mo.strict


def test_unknown_mode():
    with pytest.raises(ValueError):
        orderings_for("consume")


def test_cas_returns_observed_value():
    a = Atomic(3)
    assert a.compare_exchange_strong(3, 4, RELAXED, RELAXED) == (True, 3)
    assert a.compare_exchange_strong(3, 5, RELAXED, RELAXED) == (False, 4)
    assert a.load(RELAXED) == 4


def test_fetch_ops_return_previous():
    a = Atomic(10)
    assert a.fetch_add(2, RELAXED) == 10
    assert a.fetch_sub(5, RELAXED) == 12
    assert a.load() == 7


def test_fetch_add_is_atomic_under_threads():
    a = Atomic(0)

    def body():
        for _ in range(5000):
            a.fetch_add(1, RELAXED)

    ts = [threading.Thread(target=body) for _ in range(4)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert a.load() == 20000


@pytest.mark.parametrize("op,order", [("load", RELEASE), ("load", ACQ_REL), ("store", ACQUIRE),
                                      ("store", ACQ_REL)])
def test_traced_atomics_reject_illegal_orders(op, order):
    a = Runtime(tracer=Tracer()).atomic(0, "x")
    with pytest.raises(OrderingError):
        if op == "load":
            a.load(order)
        else:
            a.store(1, order)


def test_cas_failure_order_cannot_release():
    a = Runtime(tracer=Tracer()).atomic(0, "x")
    with pytest.raises(OrderingError):
        a.compare_exchange_strong(0, 1, RELEASE, RELEASE)


def test_spurious_weak_cas_failure_leaves_value():
    tr = Tracer(spurious_rate=1.0)
    a = Runtime(tracer=tr).atomic(0, "x")
    assert a.compare_exchange_weak(0, 1, RELAXED, RELAXED) == (False, 0)
    assert a.compare_exchange_strong(0, 1, RELAXED, RELAXED) == (True, 0)
    assert tr.spurious_failures == 1


def test_ledger_records_location_op_and_orders():
    tr = Tracer()
    rt = Runtime(tracer=tr)
    a = rt.atomic(0, "cell")
    a.load(RELAXED)
    a.compare_exchange_weak(0, 1, RELEASE, RELAXED)
    rt.fence(SEQ_CST)
    assert tr.ledger_table() == [("cell", "cas_weak", "RELEASE", "RELAXED"),
                                 ("cell", "load", "RELAXED"), ("fence", "fence", "SEQ_CST")]
