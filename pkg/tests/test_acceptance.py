"""Acceptance suite.  Each test prints one ``PASS`` or ``FAIL`` line for its criterion.

Run on its own with ``pytest tests/test_acceptance.py -s -v``.
"""

import contextlib
import itertools
import time
from pathlib import Path

import pytest

from fbcheck.blocks import TON_ET, ton, ton_ideal
from fbcheck.cli import main
from fbcheck.scenario import load_scenario, run_scenario
from fbcheck.subsystems import PushbuttonConsts, pushbutton, trip_sealed_in
from fbcheck.suites import pushbutton_space, run_table_checks, sealedin_space, table_suite
from fbcheck.tables import table
from fbcheck.time_core import SampleSchedule, TickDomain, is_filtered, left_sample
from fbcheck.timing_ops import check_timer_general
from fbcheck.verifier import (
    CorrectnessCase,
    check_completeness,
    check_consistency,
    check_correctness,
    check_disjointness,
    check_induction,
    shrink,
    space_admissible,
)

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = Path(__file__).resolve().parent / "golden" / "ton_timing.txt"


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(number, title):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            with capsys.disabled():
                verdict = "PASS" if ok else "FAIL"
                print(f"\n{verdict} criterion {number}: {title} ({time.perf_counter() - start:.1f}s)")
    return run


def test_1_timer_matches_sampled_hold(criterion):
    with criterion(1, "held_for_i <=> timer_i >= d, up to 8 samples, gaps {2,3,4}, d in 1..5"):
        start = time.perf_counter()
        cases, violations, witness = check_timer_general(
            max_samples=8, gaps=(2, 3, 4), tmin=2, tmax=4, durations=(1, 2, 3, 4, 5))
        elapsed = time.perf_counter() - start
        assert cases == sum(3 ** (n - 1) * 2 ** n * 5 for n in range(1, 9))
        assert violations == 0, witness
        assert elapsed < 60


@pytest.mark.slow
def test_2_original_sealedin_fails_at_initialization(criterion):
    with criterion(2, "original Trip Sealed-In: every input fails at tick 0 (init), shrinks to horizon 0"):
        sub = trip_sealed_in("original")
        space = sealedin_space()
        fn = CorrectnessCase(sub.netlist, sub.req, dict(sub.boundary))
        n = 0
        for inputs, sch in space.cases():
            cex = fn(inputs, sch)
            assert cex is not None
            assert (cex.tick, cex.expected, cex.actual, cex.category) == (0, True, False, "init")
            n += 1
        assert n == space.cardinality() == 2 ** 15 * 3
        report = check_correctness(sub.netlist, sub.req, space, boundary=dict(sub.boundary), shrink_result=True)
        assert report.checked == 1
        assert report.counterexample.horizon == 0
        assert shrink(report.counterexample, fn, admissible=space_admissible(space)) == report.counterexample


@pytest.mark.slow
def test_3_revised_sealedin_passes(criterion):
    with criterion(3, "revised Trip Sealed-In: consistency and correctness over 2^15 x 3 schedules"):
        start = time.perf_counter()
        sub = trip_sealed_in("revised")
        space = sealedin_space()
        assert len(space.schedules) >= 3
        assert all(len(s) == 5 for s in space.schedules)
        assert space.cardinality() == 2 ** 15 * len(space.schedules)
        for check in (check_consistency(sub.netlist, space, boundary=dict(sub.boundary)),
                      check_correctness(sub.netlist, sub.req, space, boundary=dict(sub.boundary))):
            assert check.passed, check.summary()
            assert check.checked == check.cases == space.cardinality()
        assert time.perf_counter() - start < 300


def test_4_spike_dichotomy(criterion):
    with criterion(4, "pushbutton: spike breaks the original table; filtered input clears the fix"):
        consts = PushbuttonConsts()
        assert (consts.k_debounce - consts.delta_l, consts.k_stuck - consts.delta_l) == (2, 6)
        original = pushbutton("original")
        raw_space = pushbutton_space("tick", horizon=12, step=2)
        raw = check_disjointness(original.tables[0], original.req.contexts, raw_space, shrink_result=False)
        assert not raw.passed
        m, sch = raw.counterexample.inputs["m"], raw.counterexample.schedule
        # the first witness in enumeration order carries a change no sample sees
        assert not is_filtered(m, sch)
        small = check_disjointness(original.tables[0], original.req.contexts, raw_space).counterexample
        t = small.tick
        m = small.inputs["m"]
        assert small.category == "table-overlap"
        assert m[t] != m[small.schedule.samples[left_sample(small.schedule, t)]]

        revised = pushbutton("revised")
        filtered = pushbutton_space("filtered", horizon=12, step=2)
        for r in (check_completeness(revised.tables[0], revised.req.contexts, filtered),
                  check_disjointness(revised.tables[0], revised.req.contexts, filtered),
                  check_correctness(revised.netlist, revised.req, filtered)):
            assert r.passed, r.summary()
            assert r.checked == r.cases == filtered.cardinality()


def test_5_ton_waveform_golden(criterion, capsys):
    with criterion(5, "TON waveform: Q on [6,8) and [19,22), byte-identical golden diagram"):
        scenario = ROOT / "scenarios" / "ton_timing.json"
        run = run_scenario(load_scenario(scenario))
        q, et, x = run.trace.outputs["Q"], run.trace.outputs["ET"], load_scenario(scenario).inputs["IN"]
        pt = 4
        assert [t for t, v in enumerate(q) if v] == [*range(2 + pt, 8), *range(15 + pt, 22)]
        for t in range(len(x)):
            if not x[t]:
                assert et[t] == 0
            else:
                assert et[t] == min(pt, et[t - 1] + 1 if t > 0 and x[t - 1] else 0)
        code = main(["simulate", "--scenario", str(scenario), "--diagram", "--lanes", "IN,Q,ET"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.split("\n\n", 1)[1].encode() == GOLDEN.read_bytes()


def test_6_ton_equals_ideal_timer(criterion):
    with criterion(6, "ton == ton_ideal, every tick, horizons 0..12, PT 1..5"):
        for h in range(13):
            sch = SampleSchedule.every(TickDomain(1, h), 1)
            for pt in range(1, 6):
                for bits in itertools.product((False, True), repeat=h + 1):
                    assert ton(bits, pt, sch) == ton_ideal(bits, pt, TickDomain(1, h)), (pt, bits)


# the repair as first worded: every d-row conjoined with IN
TON_ET_IN_CONJOINED = table("ton-et-in-conjoined", [
    ("IN & d >= PT", lambda c: c["IN"] and c["d"] >= c["PT"], lambda c: c["PT"]),
    ("IN & d < PT", lambda c: c["IN"] and c["d"] < c["PT"], lambda c: c["d"]),
    ("~IN", lambda c: not c["IN"], 0),
], signals=("IN", "d", "PT"))


def test_7_table_healthiness(criterion):
    with criterion(7, "tables: TON Q healthy, literal ET overlaps, repaired ET healthy, sealed-in REQ healthy"):
        for name in ("ton-q", "ton-et", "sealedin-req"):
            reports = run_table_checks(name)
            assert len(reports) == 2 and all(r.passed for r in reports), name
        literal = run_table_checks("ton-et-literal")
        assert literal[0].passed
        assert not literal[1].passed and literal[1].counterexample.category == "table-overlap"
        # an overlap whose rows disagree: IN has dropped but the frozen timer is positive
        conflict = literal[2].counterexample
        assert conflict is not None and len(set(conflict.actual)) == 2
        suite = table_suite("ton-et")
        for spec in (TON_ET, TON_ET_IN_CONJOINED):
            assert check_completeness(spec, suite.contexts, suite.space).passed
            assert check_disjointness(spec, suite.contexts, suite.space).passed


@pytest.mark.slow
def test_8_induction_cross_check(criterion):
    with criterion(8, "revised Trip Sealed-In: induction cross-check agrees with the direct scan"):
        sub = trip_sealed_in("revised")
        space = sealedin_space()
        r = check_induction(sub.netlist, sub.req, space, boundary=dict(sub.boundary))
        assert r.passed, r.summary()
        assert r.checked == r.cases == space.cardinality()
