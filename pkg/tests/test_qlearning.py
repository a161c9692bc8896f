import warnings

import numpy as np
import pytest

from aotkit.policy import (
    CoverageWarning,
    QLearnParams,
    QTable,
    TablePolicy,
    greedy_policy,
    solve_mdp_oracle,
    train_qlearning,
)
from aotkit.service import Constant, TwoPoint
from aotkit.service import Categorical


def test_constant_matches_periodic_four():
    table = train_qlearning(Constant(7.0), 1.0, QLearnParams(max_age_cap=50, training_slots=200_000), seed=0)
    pol = greedy_policy(table)
    assert pol.first_verify_age() == [3]
    assert not table.cap_hit


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_constant_greedy_equals_oracle_on_visited_states(alpha):
    p = Constant(7.0)
    q = greedy_policy(train_qlearning(p, alpha, QLearnParams(), seed=1))
    o = solve_mdp_oracle(p, alpha).policy
    n = min(q.max_age, o.max_age) + 1
    visited = q.known[:, :n]
    assert np.array_equal(q.verify[:, :n][visited], o.verify[:, :n][visited])
    # the recurrent cycle 0..lambda-1 is always learned
    lam = o.first_verify_age()[0] + 1
    assert visited[0, :lam].all()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_zero_alpha_never_verifies(seed):
    pol = greedy_policy(train_qlearning(TwoPoint(1.0, 10.0, 0.5), 0.0, QLearnParams(), seed=seed))
    assert pol.known.all()
    assert not pol.verify.any()


def test_training_is_deterministic():
    a = train_qlearning(TwoPoint(1.0, 10.0, 0.5), 1.0, QLearnParams(training_slots=20_000), seed=5)
    b = train_qlearning(TwoPoint(1.0, 10.0, 0.5), 1.0, QLearnParams(training_slots=20_000), seed=5)
    assert np.array_equal(a.q, b.q)


def test_literal_update_on_constant_rate():
    # unit step is the undamped update; deterministic dynamics still give the optimal cycle
    params = QLearnParams(learning_rate=1.0, max_age_cap=50)
    pol = greedy_policy(train_qlearning(Constant(7.0), 1.0, params, seed=5))
    assert pol.first_verify_age() == [3]


def test_greedy_argmax_and_tie_break():
    t = QTable.empty([3.0], 4, alpha=1.0)
    t.set_value(3.0, 0, 0, 5.0)
    t.set_value(3.0, 0, 1, 3.0)
    t.set_value(3.0, 1, 0, 2.0)
    t.set_value(3.0, 1, 1, 2.0)
    t.set_value(3.0, 4, 0, 0.0)
    t.set_value(3.0, 4, 1, 1.0)
    pol = greedy_policy(t)
    assert pol.decide(0, 3.0) == 0
    assert pol.decide(1, 3.0) == 0
    assert pol.decide(4, 3.0) == 1
    assert pol.decide(40, 3.0) == 1      # clamped to age 4
    assert pol.clamped == 1


def test_unvisited_state_warns_and_transmits():
    t = QTable.empty([3.0], 4)
    t.set_value(3.0, 0, 1, 1.0)
    pol = greedy_policy(t)
    with pytest.warns(CoverageWarning):
        assert pol.decide(2, 3.0) == 0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pol.decide(3, 3.0)   # warned once only
        assert pol.decide(99, 7.0) == 0
    assert pol.coverage_misses == 3


def test_qtable_round_trip():
    t = train_qlearning(Categorical([1.0, 3.0, 8.0], [0.2, 0.5, 0.3]), 0.8,
                        QLearnParams(training_slots=30_000), seed=9)
    back = QTable.loads(t.dumps())
    assert back.rates == t.rates
    assert np.array_equal(back.q[t.visits > 0], t.q[t.visits > 0])
    assert np.array_equal(back.visits, t.visits)
    assert (back.slots_trained, back.converged, back.cap_hit, back.alpha) == \
        (t.slots_trained, t.converged, t.cap_hit, t.alpha)
    assert np.array_equal(greedy_policy(back).verify, greedy_policy(t).verify)


def test_policy_table_round_trip():
    pol = greedy_policy(train_qlearning(TwoPoint(1.0, 10.0, 0.5), 1.0, QLearnParams(training_slots=20_000), seed=1))
    back = TablePolicy.loads(pol.dumps())
    assert np.array_equal(back.verify, pol.verify) and np.array_equal(back.known, pol.known)


def test_rejects_bad_documents():
    with pytest.raises(ValueError):
        QTable.from_dict({"format": "other"})
    with pytest.raises(ValueError):
        QTable.from_dict({"format": "aotkit.qtable", "version": 99})


@pytest.mark.parametrize("kw", [
    dict(epsilon0=1.5), dict(epsilon_decay_period=0), dict(epsilon_decay_factor=0.0),
    dict(gamma=1.0), dict(learning_rate=0.0), dict(max_age_cap=0), dict(training_slots=0),
    dict(lr_decay=2.0), dict(lr_scale=0.0),
])
def test_param_validation(kw):
    with pytest.raises(ValueError):
        QLearnParams(**kw)


def test_unobservable_process_rejected():
    with pytest.raises(ValueError):
        train_qlearning(TwoPoint(1.0, 10.0, 0.5).with_knowledge(False), 1.0)
