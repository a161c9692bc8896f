"""Markov chain of the AoT under stationary randomized verification.

With i.i.d. rates, any rule that depends only on (rate, age) induces a birth-
reset chain on ages 0..N: from age n the chain resets with probability p_n and
otherwise moves to n + 1. Everything here is exact (no simulation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..service import ServiceProcess, distinct_support


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.float64)
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @property
    def max_age(self) -> int:
        return len(self.pi) - 1

    def mean_age(self) -> float:
        return float(np.arange(len(self.pi)) @ self.pi)


def stationary_distribution(p) -> StationaryDistribution:
    """Stationary law of the age chain given per-age verification probabilities p_0..p_N."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or len(p) == 0:
        raise ValueError("p must be a nonempty sequence")
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise ValueError("verification probabilities must lie in [0, 1]")
    if p[-1] != 1.0:
        raise ValueError(f"p_N must be 1 for the chain to stay on 0..N, got {p[-1]}")
    # survival[n] = prod_{i<n} (1 - p_i), survival[0] = 1
    survival = np.concatenate(([1.0], np.cumprod(1.0 - p[:-1])))
    return StationaryDistribution(survival / math.fsum(survival))


def threshold_objective(n: int, mean_mu: float, alpha: float) -> float:
    """Long-run objective of verifying exactly when the age reaches ``n``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return (1 - 1 / (1 + n)) * mean_mu - alpha * n / 2


def best_threshold(mean_mu: float, alpha: float, n_max: int = 100) -> int:
    """Exhaustive argmax of ``threshold_objective`` over 0..n_max (first maximum)."""
    vals = [threshold_objective(n, mean_mu, alpha) for n in range(n_max + 1)]
    return int(np.argmax(vals))


def default_max_age(max_rate: float, alpha: float) -> int:
    """Age cap far above any optimal verification age: 10 * sqrt(2 max_rate / alpha)."""
    if alpha <= 0:
        return 100
    return max(2, math.ceil(10 * math.sqrt(2 * max_rate / alpha)))


def verify_probabilities(verify: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Per-age verification probability of a (rate, age) rule; the last age always resets."""
    p = probs @ np.asarray(verify, dtype=np.float64)
    p = np.clip(p, 0.0, 1.0)
    p[-1] = 1.0
    return p


def table_gain(verify, rates, probs, alpha: float) -> tuple[float, StationaryDistribution]:
    """Exact long-run objective of a deterministic (rate, age) verification table.

    ``verify[r, n]`` says whether to verify when the rate is ``rates[r]`` and
    the previous age is ``n``. The last age column is forced to verify.
    """
    verify = np.array(verify, dtype=bool)
    verify[:, -1] = True
    rates = np.asarray(rates, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    dist = stationary_distribution(verify_probabilities(verify, probs))
    ages = np.arange(verify.shape[1])
    reward = np.where(verify, 0.0, rates[:, None] - alpha * (ages[None, :] + 1))
    return float(dist.pi @ (probs @ reward)), dist


def improved_periodic_table(rates, lam: int, alpha: float, max_age: int) -> np.ndarray:
    ages = np.arange(max_age + 1)
    rates = np.asarray(rates, dtype=np.float64)
    return (ages[None, :] + 1 >= lam) | (rates[:, None] - alpha * (ages[None, :] + 1) <= 0)


def tune_improved_period(process: ServiceProcess, alpha: float, max_lambda: int | None = None) -> int:
    """Period that maximizes the exact long-run objective of the improved periodic rule.

    The improved rule's cycle counter always equals the age (both restart on
    every verification), so it is a (rate, age) table and ``table_gain`` is exact.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive to tune a verification period")
    rates, probs = distinct_support(process)
    cap = default_max_age(float(rates.max()), alpha)
    max_lambda = cap if max_lambda is None else min(max_lambda, cap)
    best_lam, best_gain = 1, -math.inf
    for lam in range(1, max_lambda + 1):
        g, _ = table_gain(improved_periodic_table(rates, lam, alpha, cap), rates, probs, alpha)
        if g > best_gain + 1e-12:
            best_lam, best_gain = lam, g
    return best_lam
