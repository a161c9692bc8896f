"""Age-of-trust process recursion, metric accumulation and the seeded RNG contract."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

# Age assigned at the end of a verification slot. A verified user is fully trusted.
RESET_AGE = 0

VERIFY = 1
TRANSMIT = 0

# Fixed stream identifiers: each consumer of randomness draws from its own
# child of the run seed, so call order between modules cannot shift results.
_STREAMS = {
    "service": 0,
    "exploration": 1,
    "frames": 2,
    "layout": 3,
}


def stream(seed: int, name: str, *key: int) -> np.random.Generator:
    """Independent generator for ``name`` derived from a single run seed."""
    if seed is None:
        raise ValueError("a seed is required for stochastic draws")
    ss = np.random.SeedSequence(int(seed), spawn_key=(_STREAMS[name], *key))
    return np.random.Generator(np.random.PCG64(ss))


def step_aot(age: int, indicator: int) -> int:
    """One slot of the discrete AoT recursion."""
    if age < 0:
        raise ValueError(f"age must be nonnegative, got {age}")
    if indicator not in (0, 1):
        raise ValueError(f"indicator must be 0 or 1, got {indicator}")
    return RESET_AGE if indicator == VERIFY else age + 1


class SlotRecord(NamedTuple):
    t: int
    rate: float
    indicator: int
    age: int


@dataclass(frozen=True)
class AoTTrace:
    """Realized slots 1..T of a single link.

    ``ages[k]`` is the AoT at the end of slot ``k + 1``; ``initial_age`` is
    the age before slot 1.
    """

    rates: np.ndarray
    indicators: np.ndarray
    ages: np.ndarray
    initial_age: int = RESET_AGE

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=np.float64)
        indicators = np.asarray(self.indicators, dtype=np.int8)
        ages = np.asarray(self.ages, dtype=np.int64)
        if not (rates.ndim == indicators.ndim == ages.ndim == 1):
            raise ValueError("trace columns must be one-dimensional")
        if not (len(rates) == len(indicators) == len(ages)):
            raise ValueError("trace columns must have equal length")
        for arr in (rates, indicators, ages):
            arr.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "indicators", indicators)
        object.__setattr__(self, "ages", ages)

    @property
    def horizon(self) -> int:
        return len(self.ages)

    def __len__(self) -> int:
        return self.horizon

    def slots(self) -> Iterator[SlotRecord]:
        for k in range(self.horizon):
            yield SlotRecord(k + 1, float(self.rates[k]), int(self.indicators[k]), int(self.ages[k]))

    def replay(self) -> np.ndarray:
        """Ages implied by the indicator column alone."""
        out = np.empty(self.horizon, dtype=np.int64)
        age = self.initial_age
        for k, i in enumerate(self.indicators.tolist()):
            age = step_aot(age, i)
            out[k] = age
        return out

    def is_consistent(self) -> bool:
        if not np.isin(self.indicators, (0, 1)).all():
            return False
        return bool(np.array_equal(self.replay(), self.ages))

    @classmethod
    def from_indicators(cls, indicators, rates, initial_age: int = RESET_AGE) -> "AoTTrace":
        indicators = np.asarray(indicators, dtype=np.int8)
        rates = np.broadcast_to(np.asarray(rates, dtype=np.float64), indicators.shape)
        ages = np.empty(len(indicators), dtype=np.int64)
        age = initial_age
        for k, i in enumerate(indicators.tolist()):
            age = step_aot(age, i)
            ages[k] = age
        return cls(rates, indicators, ages, initial_age)


@dataclass(frozen=True)
class SimMetrics:
    average_aot: float
    throughput: float
    objective: float
    horizon: int
    alpha: float

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        expected = self.throughput - self.alpha * self.average_aot
        if not math.isclose(self.objective, expected, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("objective must equal throughput - alpha * average_aot")

    def with_alpha(self, alpha: float) -> "SimMetrics":
        return SimMetrics(
            self.average_aot,
            self.throughput,
            self.throughput - alpha * self.average_aot,
            self.horizon,
            alpha,
        )


def accumulate_metrics(trace: AoTTrace, alpha: float) -> SimMetrics:
    """Finite-horizon average AoT, throughput and weighted objective of a trace."""
    T = trace.horizon
    if T == 0:
        raise ValueError("cannot accumulate metrics over an empty trace")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    # integer age sum is exact; the rate sum uses compensated summation
    average_aot = int(trace.ages.sum()) / T
    served = trace.rates[trace.indicators == TRANSMIT]
    throughput = math.fsum(served.tolist()) / T
    return SimMetrics(
        average_aot=average_aot,
        throughput=throughput,
        objective=throughput - alpha * average_aot,
        horizon=T,
        alpha=float(alpha),
    )


def batch_stderr(values, batches: int = 100) -> float:
    """Standard error of the mean of an autocorrelated series by batch means."""
    x = np.asarray(values, dtype=np.float64)
    n = len(x) // batches
    if n < 2:
        return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    means = x[: n * batches].reshape(batches, n).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def objective_stderr(trace: AoTTrace, alpha: float, batches: int = 100) -> float:
    """Batch-means standard error of the per-slot reward average of a trace."""
    served = np.where(trace.indicators == TRANSMIT, trace.rates, 0.0)
    return batch_stderr(served - alpha * trace.ages, batches)
