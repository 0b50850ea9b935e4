import pytest

from centralk.atomics import Runtime
from centralk.audit import Audit
from centralk.conformance import (SMALL_SCENARIOS, AuditFailure, StressReport, audit_storage,
                                  check_block_histories, differential, explore_races,
                                  lifecycle_audit, stress)
from centralk.config import StorageConfig
from centralk.item import Strategy, TaskItem
from centralk.place import Place
from centralk.storage import GlobalTaskStorage
from centralk.tracing import Tracer

SCENARIOS = {s.name: s for s in SMALL_SCENARIOS}


@pytest.mark.parametrize("ordering", ["relaxed", "strict"])
@pytest.mark.parametrize("handshake", ["acquire", "fence"])
@pytest.mark.parametrize("k", [0, 3])
def test_small_stress(ordering, handshake, k):
    rep = stress(3, 400, k, 8, ordering, handshake, seed=k)
    rep.raise_on_failure()
    assert rep.popped == rep.pushed == 1200 and rep.final_tail >= 1200 - (k + 1)
    assert rep.cleanups > 0


def test_stress_pop_every_few_pushes():
    stress(2, 300, 2, 4, pop_every=5).raise_on_failure()


def test_stress_under_detector_strict_is_race_free():
    tracer = Tracer(yield_rate=0.2, seed=1)
    rep = stress(2, 60, 1, 2, "strict", tracer=tracer)
    assert rep.passed, rep.summary()
    assert rep.flags["race_free"]


def test_stress_catches_duplicate_takes(monkeypatch):
    monkeypatch.setattr(TaskItem, "try_take", lambda self, orig=None: True)
    rep = stress(2, 200, 2, 4)
    assert rep.duplicates > 0 and not rep.passed
    with pytest.raises(AuditFailure):
        rep.raise_on_failure()


def test_audit_flags_a_gap_below_tail():
    audit = Audit()
    st = GlobalTaskStorage(1, StorageConfig(block_size=8), Runtime(audit=audit))
    p = Place(st, 0)
    for i in range(3):
        p.push(Strategy(0, 0), i)
    st.tail.store(5)
    rep = StressReport(1, 3, 0, 8, "relaxed", "acquire")
    audit_storage(st, [p], audit, rep)
    assert not rep.flags["fill_guarantee"] and not rep.flags["tail_monotonic"]


def test_lifecycle_small():
    rep = lifecycle_audit(block_size=2, threads=2, epochs=30)
    assert rep.passed, rep.problems
    assert rep.cleanups >= 30 and rep.blocks_reused > 0 and rep.blocks_allocated <= 8


def test_block_history_checker_flags_double_cleanup():
    audit = Audit()

    class B:
        uid = 1

    audit.linked(B, 0, None)
    audit.cleaned(B, 0)
    audit.cleaned(B, 0)
    audit.published(B, 0, 3)
    problems = check_block_histories(audit)
    assert any("cleaned twice" in p for p in problems)
    assert any("after its cleanup" in p for p in problems)


def test_differential_equal_and_mismatch():
    def scenario(cfg):
        return sorted(stress(2, 100, 2, 4, config=cfg).payloads.elements())

    base = StorageConfig(block_size=4)
    assert differential(base, base.replace(ordering="strict"), scenario)
    with pytest.raises(AuditFailure):
        differential(1, 2, lambda x: x)


def test_exploration_strict_is_race_free():
    res = explore_races(StorageConfig(block_size=2, ordering="strict"),
                        [SCENARIOS["push-vs-pop"], SCENARIOS["reuse-after-drain"]])
    assert res.exhaustive and res.passed, res.distinct_failures()


def test_exploration_finds_item_reuse_race_with_relaxed_decrement():
    res = explore_races(StorageConfig(block_size=2), [SCENARIOS["reuse-after-drain"]])
    found = res.distinct_failures()
    assert any("TaskItem.payload" in f and "init_item" in f for f in found), found


def test_exploration_acq_rel_decrement_removes_it():
    res = explore_races(StorageConfig(block_size=2, deregister_order="acq_rel"),
                        [SCENARIOS["reuse-after-drain"]])
    assert res.passed, res.distinct_failures()


def test_exploration_with_spurious_cas_failures():
    res = explore_races(StorageConfig(block_size=2, ordering="strict", handshake="fence"),
                        [SCENARIOS["link-race"]], bound=1, random_schedules=20, spurious_rate=0.3)
    assert res.passed, res.distinct_failures()


def test_scenarios_are_small():
    assert all(s.concurrent_ops <= 6 for s in SMALL_SCENARIOS)
