"""Verification decision rules and their analysis."""

from .base import CoverageWarning, NeverVerify, TablePolicy, VerificationPolicy
from .kinds import Never, ImprovedPeriodic, Oracle, Periodic, PolicyKind, QLearning, Table, Threshold
from .markov import (
    StationaryDistribution,
    best_threshold,
    default_max_age,
    stationary_distribution,
    table_gain,
    threshold_objective,
    tune_improved_period,
)
from .mdp import ConvergenceError, OracleParams, OracleSolution, solve_mdp_oracle
from .periodic import (
    ImprovedPeriodicPolicy,
    PeriodicPolicy,
    decide_improved_periodic,
    decide_periodic,
    optimal_period_constant,
    optimal_period_mean,
    period_objective,
)
from .qlearning import QLearnParams, QTable, greedy_policy, train_qlearning
