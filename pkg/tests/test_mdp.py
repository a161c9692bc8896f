import numpy as np
import pytest

from aotkit.core import accumulate_metrics, objective_stderr
from aotkit.policy import (
    ConvergenceError,
    ImprovedPeriodic,
    NeverVerify,
    OracleParams,
    Periodic,
    QLearning,
    solve_mdp_oracle,
    table_gain,
)
from aotkit.service import Categorical, Constant, TwoPoint, distinct_support
from aotkit.single_link import simulate


def test_constant_seven():
    sol = solve_mdp_oracle(Constant(7.0), 1.0)
    assert sol.gain == pytest.approx(3.75, abs=1e-6)
    assert sol.policy.first_verify_age() == [3]
    assert not sol.cap_reached


def test_evaluated_gain_agrees():
    sol = solve_mdp_oracle(TwoPoint(1.0, 10.0, 0.5), 1.0)
    assert sol.gain == pytest.approx(sol.evaluated_gain, abs=1e-7)
    assert sol.residual < 1e-9


def test_twopoint_policy_structure():
    sol = solve_mdp_oracle(TwoPoint(1.0, 10.0, 0.5), 1.0)
    assert sol.policy.first_verify_age() == [0, 5]
    assert sol.gain == pytest.approx(253 / 63, abs=1e-7)


def test_large_alpha_verifies_early():
    p = TwoPoint(1.0, 10.0, 0.5)
    sol = solve_mdp_oracle(p, 2 * p.max_rate)
    assert all(a <= 1 for a in sol.policy.first_verify_age())


def test_zero_alpha_never_verifies():
    sol = solve_mdp_oracle(TwoPoint(1.0, 10.0, 0.5), 0.0)
    assert isinstance(sol.policy, NeverVerify)
    assert sol.gain == 5.5


def test_iteration_cap_raises():
    with pytest.raises(ConvergenceError):
        solve_mdp_oracle(TwoPoint(1.0, 10.0, 0.5), 1.0, params=OracleParams(max_iter=3))


def test_gain_dominates_every_table():
    rates, probs = distinct_support(Categorical([1.0, 4.0, 9.0], [0.3, 0.4, 0.3]))
    sol = solve_mdp_oracle(Categorical([1.0, 4.0, 9.0], [0.3, 0.4, 0.3]), 0.7)
    rng = np.random.default_rng(0)
    for _ in range(300):
        verify = rng.random((3, 25)) < rng.random()
        g, _ = table_gain(verify, rates, probs, 0.7)
        assert g <= sol.gain + 1e-9


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_simulated_objectives_do_not_beat_oracle(alpha):
    p = TwoPoint(1.0, 10.0, 0.5)
    gain = solve_mdp_oracle(p, alpha).gain
    for kind in (Periodic(), ImprovedPeriodic(), QLearning()):
        tr = simulate(p, kind.build(p, alpha, 3), 200_000, 3)
        m = accumulate_metrics(tr, alpha)
        assert m.objective <= gain + 3 * objective_stderr(tr, alpha)
