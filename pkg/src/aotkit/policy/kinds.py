"""Declarative policy descriptions, resolved into runnable rules per (process, alpha).

A kind with ``lam=None`` is a *family*: its period is re-derived for every
alpha it is built with, which is what a Pareto sweep needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..service import ServiceProcess, distinct_support
from .base import NeverVerify, TablePolicy, VerificationPolicy
from .markov import tune_improved_period
from .mdp import OracleParams, solve_mdp_oracle
from .periodic import ImprovedPeriodicPolicy, PeriodicPolicy, optimal_period_mean
from .qlearning import QLearnParams, QTable, greedy_policy, train_qlearning


class PolicyKind:
    name = "policy"

    def build(self, process: ServiceProcess, alpha: float, seed: int) -> VerificationPolicy:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


@dataclass(frozen=True)
class Never(PolicyKind):
    name = "never"

    def build(self, process, alpha, seed):
        return NeverVerify()


@dataclass(frozen=True)
class Periodic(PolicyKind):
    """Verify every ``lam`` slots; ``lam=None`` uses the mean-rate optimal period."""

    lam: int | None = None
    name = "periodic"

    def __post_init__(self):
        if self.lam is not None and self.lam < 1:
            raise ValueError("lambda must be >= 1")

    def build(self, process, alpha, seed):
        if self.lam is not None:
            return PeriodicPolicy(self.lam)
        if alpha == 0:
            return NeverVerify()
        return PeriodicPolicy(optimal_period_mean(process, alpha))

    def describe(self):
        return f"periodic:{'auto' if self.lam is None else self.lam}"


@dataclass(frozen=True)
class ImprovedPeriodic(PolicyKind):
    """Periodic rule with the rate-triggered early verification.

    ``lam=None`` picks the period that maximizes the rule's exact long-run
    objective. ``alpha=None`` reuses the run's weighting factor.
    """

    lam: int | None = None
    alpha: float | None = None
    name = "improved"

    def build(self, process, alpha, seed):
        a = alpha if self.alpha is None else self.alpha
        if self.lam is not None:
            return ImprovedPeriodicPolicy(self.lam, a)
        if a == 0:
            return NeverVerify()
        return ImprovedPeriodicPolicy(tune_improved_period(process, a), a)

    def describe(self):
        return f"improved:{'auto' if self.lam is None else self.lam}"


@dataclass(frozen=True)
class Threshold(PolicyKind):
    """Verify as soon as the previous age reaches ``n_max_age`` (period n + 1)."""

    n_max_age: int = 0
    name = "threshold"

    def __post_init__(self):
        if self.n_max_age < 0:
            raise ValueError("threshold must be nonnegative")

    def build(self, process, alpha, seed):
        return PeriodicPolicy(self.n_max_age + 1)

    def describe(self):
        return f"threshold:{self.n_max_age}"


@dataclass(frozen=True)
class QLearning(PolicyKind):
    params: QLearnParams = field(default_factory=QLearnParams)
    table: QTable | None = field(default=None, compare=False)
    name = "qlearning"

    def build(self, process, alpha, seed):
        table = self.table if self.table is not None else train_qlearning(process, alpha, self.params, seed)
        return greedy_policy(table)


@dataclass(frozen=True)
class Oracle(PolicyKind):
    params: OracleParams = field(default_factory=OracleParams)
    name = "oracle"

    def build(self, process, alpha, seed):
        return solve_mdp_oracle(process, alpha, params=self.params).policy


@dataclass(frozen=True)
class Table(PolicyKind):
    """A previously serialized decision table."""

    policy: TablePolicy = field(compare=False)
    name = "table"

    def build(self, process, alpha, seed):
        rates, _ = distinct_support(process)
        missing = set(rates.tolist()) - set(self.policy.rates)
        if missing:
            raise ValueError(f"table has no rows for rates {sorted(missing)}")
        return TablePolicy(self.policy.rates, self.policy.verify, self.policy.known, self.policy.descriptor)
