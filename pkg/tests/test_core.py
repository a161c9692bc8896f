import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aotkit.core import AoTTrace, SimMetrics, accumulate_metrics, step_aot, stream


@pytest.mark.parametrize("age, ind, expected", [(5, 1, 0), (0, 0, 1), (3, 0, 4)])
def test_step_aot(age, ind, expected):
    assert step_aot(age, ind) == expected


def test_step_aot_rejects_bad_input():
    with pytest.raises(ValueError):
        step_aot(-1, 0)
    with pytest.raises(ValueError):
        step_aot(2, 3)


def test_one_periodic_cycle():
    tr = AoTTrace.from_indicators([1, 0, 0, 0], 7.0)
    assert tr.ages.tolist() == [0, 1, 2, 3]
    m = accumulate_metrics(tr, 1.0)
    assert (m.average_aot, m.throughput, m.objective) == (1.5, 5.25, 3.75)


def test_all_verify_trace():
    m = accumulate_metrics(AoTTrace.from_indicators([1] * 9, 7.0), 2.0)
    assert (m.average_aot, m.throughput, m.objective) == (0.0, 0.0, 0.0)


def test_never_verify_trace():
    tr = AoTTrace.from_indicators([0, 0, 0], 7.0)
    assert tr.ages.tolist() == [1, 2, 3]
    m = accumulate_metrics(tr, 0.0)
    assert m.average_aot == 2 and m.throughput == 7


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        accumulate_metrics(AoTTrace.from_indicators([], 1.0), 1.0)


def test_negative_alpha_rejected():
    with pytest.raises(ValueError):
        accumulate_metrics(AoTTrace.from_indicators([0], 1.0), -0.5)


def test_trace_columns_are_read_only():
    tr = AoTTrace.from_indicators([0, 1], 2.0)
    with pytest.raises(ValueError):
        tr.ages[0] = 9


def test_inconsistent_trace_detected():
    tr = AoTTrace(np.ones(3), [0, 0, 0], [1, 2, 4])
    assert not tr.is_consistent()
    assert AoTTrace.from_indicators([0, 0, 1], 1.0).is_consistent()


def test_slots_are_one_based():
    recs = list(AoTTrace.from_indicators([0, 1], [3.0, 4.0]).slots())
    assert recs[0].t == 1 and recs[1] == (2, 4.0, 1, 0)


def test_metrics_identity_enforced():
    with pytest.raises(ValueError):
        SimMetrics(1.0, 5.0, 3.0, 10, 1.0)
    m = SimMetrics(1.0, 5.0, 4.0, 10, 1.0).with_alpha(2.0)
    assert m.objective == 3.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=300),
       st.lists(st.floats(0.1, 50), min_size=1, max_size=1))
def test_replay_reproduces_ages(inds, rate):
    tr = AoTTrace.from_indicators(inds, rate[0])
    assert tr.is_consistent()
    assert np.array_equal(tr.replay(), tr.ages)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(1, 30), st.floats(0.5, 100))
def test_periodic_closed_forms_exact(lam, cycles, mu):
    inds = ([1] + [0] * (lam - 1)) * cycles
    m = accumulate_metrics(AoTTrace.from_indicators(inds, mu), 0.0)
    assert m.average_aot == (lam - 1) / 2
    assert math.isclose(m.throughput, mu * (lam - 1) / lam, rel_tol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=200), st.floats(0, 10), st.floats(0, 10))
def test_objective_nonincreasing_in_alpha(inds, a, b):
    tr = AoTTrace.from_indicators(inds, 3.0)
    lo, hi = sorted((a, b))
    assert accumulate_metrics(tr, hi).objective <= accumulate_metrics(tr, lo).objective


def test_streams_are_independent_and_repeatable():
    a = stream(5, "service").random(4)
    assert np.array_equal(a, stream(5, "service").random(4))
    assert not np.array_equal(a, stream(5, "exploration").random(4))
    with pytest.raises(ValueError):
        stream(None, "service")
