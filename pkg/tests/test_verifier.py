import itertools
import random
from dataclasses import dataclass

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbcheck.blocks import TON_ET, TON_Q
from fbcheck.subsystems import PushbuttonConsts, PushbuttonReq, pushbutton, trip_sealed_in
from fbcheck.tables import table
from fbcheck.time_core import SampleSchedule, TickDomain, change_points, is_filtered
from fbcheck.verifier import (
    CardinalityError,
    Counterexample,
    CorrectnessCase,
    InputSpace,
    InputSpec,
    TableCase,
    UnsoundCounterexample,
    WORKERS_ENV,
    check_completeness,
    check_correctness,
    check_disjointness,
    check_induction,
    check_random,
    run_cases,
    shrink,
    space_admissible,
)
from fbcheck.suites import TonContexts, pushbutton_space, sealedin_space, ton_space

BOOL = (False, True)


def tick_space(h, step=1, names=("x",), discipline="tick"):
    sch = SampleSchedule.every(TickDomain(1, h), step)
    return InputSpace(tuple(InputSpec(n, BOOL, discipline) for n in names), (sch,))


@dataclass(frozen=True)
class SpikeCase:
    """Fails one tick after a one-tick pulse that no sample saw."""

    def __call__(self, inputs, schedule):
        x = inputs["x"]
        samples = set(schedule.samples)
        for t in range(1, len(x) - 1):
            if x[t] and not x[t - 1] and not x[t + 1] and t not in samples:
                return Counterexample("spike", dict(inputs), schedule, t + 1, category="other", signal="x")
        return None


@dataclass(frozen=True)
class AlwaysFails:
    def __call__(self, inputs, schedule):
        return Counterexample("init", dict(inputs), schedule, 0, expected=True, actual=False, category="init")


# -- table checks -------------------------------------------------------------------------


def test_table_without_the_low_row_has_a_gap_witness():
    only_high = table("only-high", [("d >= PT", lambda c: c["d"] >= c["PT"], True)], signals=("d", "PT"))
    r = check_completeness(only_high, TonContexts(4), ton_space(6))
    assert not r.passed
    cex = r.counterexample
    assert cex.category == "table-gap"
    ctx = TonContexts(4)(cex.inputs, cex.schedule)[cex.tick]
    assert ctx["d"] < ctx["PT"]


def test_ton_tables_pass_both_checks():
    for spec in (TON_Q, TON_ET):
        assert check_completeness(spec, TonContexts(3), ton_space(6)).passed
        assert check_disjointness(spec, TonContexts(3), ton_space(6)).passed


def test_overlapping_rows_are_reported_with_labels():
    both = table("both", [("x", lambda c: c["x"], 1), ("true", lambda c: True, 2)], signals=("x",))
    contexts = lambda inputs, schedule: [{"x": v} for v in inputs["x"]]  # noqa: E731
    r = check_disjointness(both, contexts, tick_space(3))
    assert r.counterexample.expected == ["x", "true"]
    assert r.counterexample.actual == [1, 2]
    # the shrunk witness is the shortest input that turns x on
    assert r.counterexample.horizon == r.counterexample.tick


# -- spaces and bookkeeping ---------------------------------------------------------------------


def test_case_index_matches_enumeration_order():
    space = InputSpace(
        (InputSpec("a", BOOL, "sample"), InputSpec("b", ("p", "q", "r"), "tick")),
        (SampleSchedule.every(TickDomain(1, 2), 2), SampleSchedule.every(TickDomain(1, 3), 3)),
    )
    listed = list(space.cases())
    assert len(listed) == space.cardinality()
    for i, case in enumerate(listed):
        assert space.case(i) == case
    with pytest.raises(IndexError):
        space.case(len(listed))


def test_sample_discipline_changes_only_at_samples():
    space = tick_space(6, step=3, discipline="sample")
    for inputs, sch in space.cases():
        assert set(change_points(inputs["x"])) <= set(sch.samples)
    assert space.cardinality() == 2 ** 3


def test_filtered_discipline_matches_the_predicate():
    space = tick_space(8, step=2, discipline="filtered")
    got = {inputs["x"] for inputs, _ in space.cases()}
    sch = space.schedules[0]
    want = {p for p in itertools.product(BOOL, repeat=9) if is_filtered(p, sch)}
    assert got == want


def test_cardinality_refused_above_cap():
    space = tick_space(20, names=("a", "b"))
    with pytest.raises(CardinalityError) as info:
        space.cardinality()
    assert info.value.count > info.value.cap
    with pytest.raises(CardinalityError):
        run_cases(AlwaysFails(), tick_space(4), cap=16)


def test_counts_for_passing_and_failing_runs():
    r = check_completeness(TON_Q, TonContexts(2), ton_space(5))
    assert r.passed and r.cases == r.checked == ton_space(5).cardinality()
    total, checked, cex = run_cases(SpikeCase(), tick_space(6, step=2))
    assert total == 2 ** 7
    assert cex.case_index == checked - 1
    for i in range(cex.case_index):
        assert SpikeCase()(*tick_space(6, step=2).case(i)) is None


def test_random_mode_is_reproducible():
    space = pushbutton_space("tick")
    fn = TableCase(pushbutton("original").tables[0], PushbuttonReq(PushbuttonConsts(), "original").contexts,
                   "disjointness")
    a = check_random(fn, space, 500, seed=7, check="disjointness")
    b = check_random(fn, space, 500, seed=7, check="disjointness")
    assert a.counterexample == b.counterexample and a.checked == b.checked
    assert a.mode == "random(seed=7)"


def test_random_filtered_draws_are_filtered():
    space = tick_space(16, step=3, discipline="filtered")
    rng = random.Random(1)
    for _ in range(200):
        inputs, sch = space.random_case(rng)
        assert is_filtered(inputs["x"], sch)


# -- determinism across workers ----------------------------------------------------------------


def _pushbutton_disjointness(workers):
    sub = pushbutton("original")
    return check_disjointness(sub.tables[0], sub.req.contexts, pushbutton_space("tick"), workers=workers)


def test_first_counterexample_independent_of_worker_count():
    one = _pushbutton_disjointness(1)
    two = _pushbutton_disjointness(2)
    assert not one.passed
    assert (one.checked, one.counterexample) == (two.checked, two.counterexample)
    assert one.counterexample.case_index == two.counterexample.case_index


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    space = sealedin_space(gaps=((2, 2),))
    sub = trip_sealed_in("revised")
    env = check_correctness(sub.netlist, sub.req, space, boundary=dict(sub.boundary))
    monkeypatch.setenv(WORKERS_ENV, "1")
    single = check_correctness(sub.netlist, sub.req, space, boundary=dict(sub.boundary))
    assert env.passed and single.passed and env.checked == single.checked


# -- shrinking -------------------------------------------------------------------------------


def test_init_failure_shrinks_to_horizon_zero():
    space = sealedin_space(gaps=((2, 3, 4),))
    sub = trip_sealed_in("original")
    r = check_correctness(sub.netlist, sub.req, space, boundary=dict(sub.boundary), shrink_result=True)
    cex = r.counterexample
    assert (cex.tick, cex.category, cex.horizon) == (0, "init", 0)
    assert cex.expected is True and cex.actual is False


def test_spike_shrinks_to_a_single_pulse():
    sch = SampleSchedule.every(TickDomain(1, 14), 3)
    x = [False] * 15
    # a three-tick pulse the samples do see, then unseen spikes at 5, 7 and 10
    for t in (1, 2, 3, 5, 7, 10):
        x[t] = True
    inputs = {"x": tuple(x)}
    cex = SpikeCase()(inputs, sch)
    assert cex.tick == 6 and cex.change_point_count() == 8
    small = shrink(cex, SpikeCase())
    assert small.horizon == small.tick == 6
    assert small.inputs["x"] == (False,) * 5 + (True, False)
    assert len(change_points(small.inputs["x"])) == 2
    assert SpikeCase()(small.inputs, small.schedule).same_failure(small)


def test_minimal_counterexample_is_returned_unchanged():
    sch = SampleSchedule.every(TickDomain(1, 2), 3)
    cex = SpikeCase()({"x": (False, True, False)}, sch)
    assert shrink(cex, SpikeCase()) == cex


def test_shrinking_respects_admissibility():
    space = tick_space(8, step=2, discipline="sample")
    admissible = space_admissible(space)
    sch = space.schedules[0]
    x = (False, False, True, True, False, False, True, True, True)
    cex = AlwaysFails()({"x": x}, sch)
    small = shrink(cex, AlwaysFails(), admissible=admissible)
    assert admissible(small.inputs, small.schedule)
    assert small.horizon == 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.booleans(), min_size=4, max_size=14), st.integers(2, 4))
def test_shrink_keeps_failure_and_never_grows(bits, step):
    sch = SampleSchedule.every(TickDomain(1, len(bits) - 1), step)
    cex = SpikeCase()({"x": tuple(bits)}, sch)
    if cex is None:
        return
    small = shrink(cex, SpikeCase())
    again = SpikeCase()(small.inputs, small.schedule)
    assert again is not None and again.same_failure(small)
    assert (small.horizon, small.change_point_count()) <= (cex.horizon, cex.change_point_count())


# -- replay soundness and induction -----------------------------------------------------------


@dataclass
class Flaky:
    calls: int = 0

    def __call__(self, inputs, schedule):
        self.calls += 1
        if self.calls == 1:
            return Counterexample("flaky", dict(inputs), schedule, 0)
        return None


def test_counterexample_that_does_not_replay_is_a_checker_bug():
    from fbcheck.verifier import _finish

    with pytest.raises(UnsoundCounterexample):
        _finish("flaky", "x", Flaky(), tick_space(1), 2 ** 22, 1)


def test_reported_counterexamples_replay():
    sub = pushbutton("original")
    space = pushbutton_space("tick")
    fn = CorrectnessCase(sub.netlist, sub.req)
    r = check_correctness(sub.netlist, sub.req, space, shrink_result=True)
    assert not r.passed
    again = fn(r.counterexample.inputs, r.counterexample.schedule)
    assert again.same_failure(r.counterexample)


@pytest.mark.parametrize("variant", ["original", "revised"])
def test_induction_agrees_with_direct_scan(variant):
    sub = trip_sealed_in(variant)
    r = check_induction(sub.netlist, sub.req, sealedin_space(gaps=((2, 3, 2),)), boundary=dict(sub.boundary))
    assert r.passed and r.checked == r.cases
