import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbcheck.time_core import DomainError, SampleSchedule, TickDomain, is_filtered
from fbcheck.timing_ops import (
    HeldForVerdict,
    check_timer_general,
    held_for_envelope,
    held_for_exact,
    held_for_i,
    held_for_i_trajectory,
    held_for_s,
    held_for_s_all,
    refinement_experiment,
    timer_i,
    timer_i_trajectory,
    timer_s,
    timer_s_all,
)


def held_exact_oracle(p, d, t, delta):
    return any(all(p[j] for j in range(tj, t + 1)) and (t - tj) * delta >= d for tj in range(t + 1))


def held_s_oracle(p, d, sch, ne):
    s, delta = sch.samples, sch.domain.delta
    return any(
        all(p[s[n]] for n in range(n0, ne + 1)) and (s[ne] - s[n0]) * delta >= d for n0 in range(ne + 1)
    )


def timer_oracle(p, sch, timeout, ne):
    """Saturated span from the earliest sample n0 with p on every sample of [n0, ne]."""
    s, delta = sch.samples, sch.domain.delta
    if not p[s[ne]]:
        return 0
    n0 = ne
    while n0 > 0 and p[s[n0 - 1]]:
        n0 -= 1
    return min(timeout, (s[ne] - s[n0]) * delta)


@st.composite
def sampled_signal(draw, max_horizon=14):
    delta = draw(st.sampled_from([1, 2, 50]))
    tmin_t = draw(st.integers(1, 2))
    tmax_t = draw(st.integers(tmin_t, 4))
    horizon = draw(st.integers(0, max_horizon))
    samples = [0]
    while True:
        g = draw(st.integers(tmin_t, tmax_t))
        if samples[-1] + g > horizon:
            break
        samples.append(samples[-1] + g)
    sch = SampleSchedule(TickDomain(delta, horizon), tuple(samples), tmin_t * delta, tmax_t * delta)
    p = tuple(draw(st.lists(st.booleans(), min_size=horizon + 1, max_size=horizon + 1)))
    d = draw(st.integers(0, 6)) * delta
    return p, sch, d


# -- held_for_exact and the envelope -------------------------------------------------------


def test_held_for_exact_examples():
    assert held_for_exact((True,) * 4, 3, 3)
    p = (False, False, True, True, True, False)
    assert not held_for_exact(p, 3, 4)
    assert held_for_exact(p, 2, 4)
    assert not any(held_for_exact((False,) * 6, d, t) for d in (1, 2, 5) for t in range(6))


def test_held_for_exact_zero_duration_is_current_value():
    p = (True, False, True)
    assert [held_for_exact(p, 0, t) for t in range(3)] == [True, False, True]


def test_held_for_exact_matches_oracle_exhaustively():
    for h in range(0, 8):
        for bits in itertools.product((False, True), repeat=h + 1):
            for d in range(0, h + 2):
                for t in range(h + 1):
                    assert held_for_exact(bits, d, t) == held_exact_oracle(bits, d, t, 1)


def _held_for(ms, delta=50, lead=2):
    """p false for ``lead`` ticks, then true for ``ms`` time units up to the last tick."""
    n = ms // delta
    return (False,) * lead + (True,) * (n + 1)


def test_envelope_examples_with_millisecond_ticks():
    delta = 50
    for held, verdict in ((350, HeldForVerdict.MUST_HOLD), (200, HeldForVerdict.MUST_NOT_HOLD),
                          (300, HeldForVerdict.FREE), (250, HeldForVerdict.FREE)):
        p = _held_for(held)
        assert held_for_envelope(p, 300, 50, 50, len(p) - 1, delta) is verdict, held


def test_envelope_rejects_left_tolerance_above_duration():
    with pytest.raises(DomainError):
        held_for_envelope((True,), 2, 3, 0, 0)


@given(st.lists(st.booleans(), min_size=1, max_size=12), st.integers(0, 5), st.integers(0, 5), st.integers(0, 5))
def test_envelope_gives_one_verdict(p, d, dl, dr):
    if dl > d:
        return
    t = len(p) - 1
    must_hold = held_for_exact(p, d + dr, t)
    must_not = not held_for_exact(p, d - dl, t)
    assert not (must_hold and must_not)
    v = held_for_envelope(p, d, dl, dr, t)
    assert (v is HeldForVerdict.MUST_HOLD) == must_hold
    assert (v is HeldForVerdict.MUST_NOT_HOLD) == must_not


# -- sampled operators ---------------------------------------------------------------------


def test_held_for_s_examples():
    sch = SampleSchedule.every(TickDomain(1, 6), 2)
    p = (True,) * 7
    assert held_for_s(p, 4, sch, 3)
    only_last = (False,) * 6 + (True,)
    assert held_for_s(only_last, 0, sch, 3)
    assert not held_for_s(only_last, 0, sch, 2)


def test_held_for_i_is_left_sample_value():
    sch = SampleSchedule.every(TickDomain(1, 7), 2)
    p = (True,) * 8
    assert held_for_i(p, 4, sch, 4) == held_for_s(p, 4, sch, 2)
    assert held_for_i(p, 4, sch, 5) == held_for_s(p, 4, sch, 2)
    assert held_for_i(p, 4, sch, 3) is False


def test_held_for_s_index_checked():
    sch = SampleSchedule.every(TickDomain(1, 4), 2)
    with pytest.raises(DomainError):
        held_for_s((True,) * 5, 0, sch, 3)


def test_timer_s_examples():
    sch = SampleSchedule.every(TickDomain(1, 6), 2)
    p = sample = (False, False, True, True, True, True, True)
    assert [timer_s(p, sch, 10, n) for n in range(4)] == [0, 0, 2, 4]
    assert timer_s(sample, sch, 3, 3) == 3
    off = (True,) * 6 + (False,)
    assert timer_s(off, sch, 10, 3) == 0


def test_timer_i_zero_timeout():
    sch = SampleSchedule.every(TickDomain(1, 9), 3)
    assert set(timer_i_trajectory((True,) * 10, sch, 0)) == {0}


@settings(max_examples=400)
@given(sampled_signal())
def test_sampled_operators_match_oracles(case):
    p, sch, d = case
    per_sample = held_for_s_all(p, d, sch)
    timers = timer_s_all(p, sch, d)
    for ne in range(len(sch)):
        assert held_for_s(p, d, sch, ne) == per_sample[ne] == held_s_oracle(p, d, sch, ne)
        assert timer_s(p, sch, d, ne) == timers[ne] == timer_oracle(p, sch, d, ne)
        assert 0 <= timers[ne] <= d
        if not p[sch.samples[ne]]:
            assert timers[ne] == 0


@settings(max_examples=300)
@given(sampled_signal())
def test_interpolated_operators_are_constant_between_samples(case):
    p, sch, d = case
    held = held_for_i_trajectory(p, d, sch)
    timer = timer_i_trajectory(p, sch, d)
    for t in sch.domain.ticks:
        s = sch.samples[max(n for n, x in enumerate(sch.samples) if x <= t)]
        assert held[t] == held[s] == held_for_i(p, d, sch, t)
        assert timer[t] == timer[s] == timer_i(p, sch, d, t)
        if d > 0:
            assert held[t] == (timer[t] >= d)


def test_timer_equivalence_needs_positive_duration():
    # with d = 0 the timer is trivially >= d but Held_For still needs p at the sample
    sch = SampleSchedule.every(TickDomain(1, 0), 1)
    assert timer_i((False,), sch, 0, 0) >= 0
    assert not held_for_i((False,), 0, sch, 0)


@settings(max_examples=400)
@given(sampled_signal())
def test_filtered_sampled_hold_implies_exact_hold(case):
    p, sch, d = case
    if not is_filtered(p, sch):
        return
    for ne in range(len(sch)):
        if held_for_s(p, d, sch, ne):
            assert held_for_exact(p, d, sch.samples[ne], sch.domain.delta)


def test_unfiltered_sampled_hold_can_miss_a_drop():
    sch = SampleSchedule.every(TickDomain(1, 4), 2)
    p = (True, False, True, True, True)
    assert held_for_s(p, 4, sch, 2)
    assert not held_for_exact(p, 4, 4)


def test_timer_general_small_instance():
    cases, violations, witness = check_timer_general(max_samples=4, durations=(1, 2, 3))
    assert cases == sum(3 ** (n - 1) * 2 ** n * 3 for n in range(1, 5))
    assert violations == 0 and witness is None


# -- refinement experiment -------------------------------------------------------------------


@pytest.fixture(scope="module")
def refinement():
    return refinement_experiment(horizon=9)


def test_every_tick_sampling_refines_the_envelope(refinement):
    every_tick = [r for r in refinement if r.tmax == 1]
    assert every_tick and all(r.refines for r in every_tick)


def test_enough_tolerance_means_no_missed_detection(refinement):
    # rise-to-first-sample plus last-sample-to-now each cost up to tmax - delta
    for r in refinement:
        if r.dl + r.dr >= 2 * (r.tmax - 1):
            assert r.missed == 0, r


def test_release_between_samples_is_reported(refinement):
    for r in refinement:
        if r.tmax > 1:
            assert r.spurious > 0
            assert not r.refines
    r = next(r for r in refinement if r.tmax > 1)
    samples, p, t, verdict = r.witness
    assert t <= len(p) - 1
