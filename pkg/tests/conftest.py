import pytest

from centralk.atomics import Runtime
from centralk.interleave import ControlledScheduler, PrefixChooser
from centralk.tracing import Tracer


class Controlled:
    """Traced runtime whose threads run one at a time in a replayable order."""

    def __init__(self, prefix=(), ordering="relaxed"):
        self.sched = ControlledScheduler(PrefixChooser(prefix), max_steps=10_000, timeout=20)
        self.tracer = Tracer(scheduler=self.sched)
        self.rt = Runtime(ordering, tracer=self.tracer)

    def run(self, *fns):
        self.sched.run(list(fns), tracer=self.tracer)
        return self.tracer.races


@pytest.fixture
def controlled():
    return Controlled
