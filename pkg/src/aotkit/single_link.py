"""Finite-horizon single-link simulation and alpha sweeps."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import AoTTrace, SimMetrics, accumulate_metrics
from .policy import PolicyKind, TablePolicy, VerificationPolicy
from .service import ServiceProcess, mean_rate


class ObservabilityError(ValueError):
    pass


@dataclass(frozen=True)
class SingleLinkRun:
    process: ServiceProcess
    policy: PolicyKind
    alpha: float
    horizon: int
    seed: int

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")


@dataclass
class RunResult:
    trace: AoTTrace
    metrics: SimMetrics
    policy: VerificationPolicy

    @property
    def descriptor(self) -> str:
        return self.policy.descriptor


@dataclass(frozen=True)
class ParetoPoint:
    alpha: float
    average_aot: float
    throughput: float
    objective: float
    policy_descriptor: str

    @classmethod
    def from_metrics(cls, m: SimMetrics, descriptor: str) -> "ParetoPoint":
        return cls(m.alpha, m.average_aot, m.throughput, m.objective, descriptor)


def simulate(process: ServiceProcess, policy: VerificationPolicy, horizon: int, seed: int) -> AoTTrace:
    """Drive an already-built rule over slots 1..horizon.

    Within a slot: the rate is drawn, the rule decides, then the age updates.
    """
    if policy.needs_rate and not process.observable:
        raise ObservabilityError(
            f"{policy.descriptor} needs the instantaneous rate, but the process only exposes its mean"
        )
    rates = process.reseed(seed).sample_rates(horizon)
    seen = rates.tolist() if process.observable else [mean_rate(process)] * horizon
    policy.reset()
    decide = policy.decide
    indicators = [0] * horizon
    ages = [0] * horizon
    age = 0
    for k in range(horizon):
        i = decide(age, seen[k])
        age = 0 if i else age + 1
        indicators[k] = i
        ages[k] = age
    return AoTTrace(rates, np.array(indicators, dtype=np.int8), np.array(ages, dtype=np.int64))


def run(config: SingleLinkRun) -> RunResult:
    policy = config.policy.build(config.process, config.alpha, config.seed)
    trace = simulate(config.process, policy, config.horizon, config.seed)
    return RunResult(trace, accumulate_metrics(trace, config.alpha), policy)


def _sweep_point(args) -> ParetoPoint:
    process, family, alpha, horizon, seed = args
    res = run(SingleLinkRun(process, family, alpha, horizon, seed))
    return ParetoPoint.from_metrics(res.metrics, res.descriptor)


def pareto_sweep(process: ServiceProcess, family: PolicyKind, alphas, horizon: int, seed: int,
                 workers: int | None = None) -> list[ParetoPoint]:
    """One point per alpha, re-deriving the policy each time; sorted by throughput.

    The same seed is used at every alpha, so points differ only through the policy.
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alphas must be nonempty")
    if any(a < 0 for a in alphas):
        raise ValueError("alphas must be nonnegative")
    jobs = [(process, family, a, horizon, seed) for a in alphas]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_sweep_point, jobs))
    else:
        points = [_sweep_point(j) for j in jobs]
    return sorted(points, key=lambda p: p.throughput)


def coverage_misses(result: RunResult) -> int:
    return result.policy.coverage_misses if isinstance(result.policy, TablePolicy) else 0
