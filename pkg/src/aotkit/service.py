"""Per-slot service-rate processes: constant, two-point and categorical, all i.i.d."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .core import stream

# Slots are drawn in fixed-size blocks, each with its own child stream, so that
# rate(t) is a pure function of (seed, t) and a whole horizon is one vector draw.
BLOCK = 4096


@lru_cache(maxsize=64)
def _block_uniforms(seed: int, block: int) -> np.ndarray:
    u = stream(seed, "service", block).random(BLOCK)
    u.setflags(write=False)
    return u


@dataclass(frozen=True)
class ServiceProcess:
    """Base class. Subclasses define the finite rate support.

    ``observable`` marks whether the instantaneous rate can be measured at the
    start of a slot; when False, decision rules only see the mean rate.
    """

    seed: int = field(default=0, kw_only=True)
    observable: bool = field(default=True, kw_only=True)

    kind = "abstract"

    def support(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        raise NotImplementedError

    def _validate(self) -> None:
        values, probs = self.support()
        if len(values) == 0 or len(values) != len(probs):
            raise ValueError("rate values and probabilities must be nonempty and of equal length")
        if any(not (v > 0 and math.isfinite(v)) for v in values):
            raise ValueError(f"all service rates must be positive and finite, got {values}")
        if any(p < 0 or p > 1 for p in probs):
            raise ValueError(f"probabilities must lie in [0, 1], got {probs}")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {math.fsum(probs)!r}")

    @property
    def values(self) -> tuple[float, ...]:
        return self.support()[0]

    @property
    def probs(self) -> tuple[float, ...]:
        return self.support()[1]

    @property
    def max_rate(self) -> float:
        return max(self.values)

    @property
    def is_deterministic(self) -> bool:
        return sum(p > 0 for p in self.probs) == 1

    def reseed(self, seed: int) -> "ServiceProcess":
        return replace(self, seed=seed)

    def with_knowledge(self, observable: bool) -> "ServiceProcess":
        return replace(self, observable=observable)

    def _from_uniform(self, u: np.ndarray) -> np.ndarray:
        values, probs = self.support()
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, u, side="right")
        return np.asarray(values, dtype=np.float64)[np.minimum(idx, len(values) - 1)]

    def sample_rate(self, t: int) -> float:
        """Rate of slot ``t`` (1-based)."""
        if t < 1:
            raise ValueError(f"slot index must be >= 1, got {t}")
        if self.is_deterministic:
            return self.values[int(np.argmax(self.probs))]
        b, k = divmod(t - 1, BLOCK)
        return float(self._from_uniform(_block_uniforms(self.seed, b)[k : k + 1])[0])

    def sample_rates(self, horizon: int) -> np.ndarray:
        """Rates of slots 1..horizon; element ``t-1`` equals ``sample_rate(t)``."""
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.is_deterministic:
            return np.full(horizon, self.sample_rate(1), dtype=np.float64)
        nblocks = -(-horizon // BLOCK)
        u = np.concatenate([_block_uniforms(self.seed, b) for b in range(nblocks)]) if nblocks else np.empty(0)
        return self._from_uniform(u[:horizon])

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(ServiceProcess):
    rate: float

    kind = "constant"

    def __post_init__(self):
        self._validate()

    def support(self):
        return (float(self.rate),), (1.0,)

    def describe(self) -> str:
        return f"constant:{self.rate:g}"


@dataclass(frozen=True)
class TwoPoint(ServiceProcess):
    low: float
    high: float
    p_high: float

    kind = "twopoint"

    def __post_init__(self):
        self._validate()

    def support(self):
        return (float(self.low), float(self.high)), (1.0 - self.p_high, float(self.p_high))

    def describe(self) -> str:
        return f"twopoint:{self.low:g},{self.high:g},{self.p_high:g}"


@dataclass(frozen=True)
class Categorical(ServiceProcess):
    rates: tuple[float, ...]
    weights: tuple[float, ...]

    kind = "categorical"

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(v) for v in self.rates))
        object.__setattr__(self, "weights", tuple(float(p) for p in self.weights))
        self._validate()

    def support(self):
        return self.rates, self.weights

    def describe(self) -> str:
        return "categorical:" + ",".join(f"{v:g}@{p:g}" for v, p in zip(self.rates, self.weights))


def sample_rate(process: ServiceProcess, t: int) -> float:
    return process.sample_rate(t)


def mean_rate(process: ServiceProcess) -> float:
    """E[mu(t)], computed from the distribution rather than by sampling."""
    values, probs = process.support()
    return math.fsum(v * p for v, p in zip(values, probs))


def rate_variance(process: ServiceProcess) -> float:
    values, probs = process.support()
    mu = mean_rate(process)
    return math.fsum(p * (v - mu) ** 2 for v, p in zip(values, probs))


def distinct_support(process: ServiceProcess) -> tuple[np.ndarray, np.ndarray]:
    """Distinct rate values (sorted) with merged probabilities."""
    values, probs = process.support()
    merged: dict[float, float] = {}
    for v, p in zip(values, probs):
        merged[v] = merged.get(v, 0.0) + p
    keys = sorted(merged)
    return np.array(keys, dtype=np.float64), np.array([merged[k] for k in keys], dtype=np.float64)
