"""Periodic verification: closed-form periods and the per-slot decision rules."""

from __future__ import annotations

import math

from ..core import TRANSMIT, VERIFY
from ..service import ServiceProcess, mean_rate
from .base import VerificationPolicy


def period_objective(lam, mu, alpha):
    """Long-run objective of verifying once every ``lam`` slots at constant rate ``mu``.

    Works elementwise on numpy arrays as well as on scalars.
    """
    return (2 * mu - alpha * lam) * (lam - 1) / (2 * lam)


def optimal_period_constant(mu: float, alpha: float) -> int:
    """Best integer verification period for a constant service rate.

    The continuous optimum sqrt(2 mu / alpha) is rounded both ways and the
    better candidate kept; on a tie the shorter period wins.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if alpha == 0:
        raise ValueError("alpha = 0 has no finite optimal period (never verify)")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    x = math.sqrt(2 * mu / alpha)
    candidates = sorted({c for c in (math.floor(x), math.ceil(x)) if c >= 1})
    best = candidates[0]
    for lam in candidates[1:]:
        if period_objective(lam, mu, alpha) > period_objective(best, mu, alpha):
            best = lam
    return best


def optimal_period_mean(process: ServiceProcess, alpha: float) -> int:
    return optimal_period_constant(mean_rate(process), alpha)


def decide_periodic(counter: int, lam: int) -> int:
    """Verify on every ``lam``-th slot; ``counter`` counts slots since the last verification."""
    if counter < 0:
        raise ValueError("counter must be nonnegative")
    return VERIFY if counter + 1 >= lam else TRANSMIT


def decide_improved_periodic(counter: int, age: int, rate: float, lam: int, alpha: float) -> int:
    """Periodic rule plus an immediate verification whenever transmitting would earn nothing."""
    if rate - alpha * (age + 1) <= 0:
        return VERIFY
    return decide_periodic(counter, lam)


class PeriodicPolicy(VerificationPolicy):
    needs_rate = False

    def __init__(self, lam: int):
        if lam < 1:
            raise ValueError(f"period must be >= 1, got {lam}")
        self.lam = int(lam)
        self.counter = 0
        self.descriptor = f"periodic(lambda={self.lam})"

    def reset(self):
        self.counter = 0

    def decide(self, age, rate):
        a = VERIFY if self.counter + 1 >= self.lam else TRANSMIT
        self.counter = 0 if a else self.counter + 1
        return a


class ImprovedPeriodicPolicy(VerificationPolicy):
    needs_rate = True

    def __init__(self, lam: int, alpha: float):
        if lam < 1:
            raise ValueError(f"period must be >= 1, got {lam}")
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        self.lam = int(lam)
        self.alpha = float(alpha)
        self.counter = 0
        self.descriptor = f"improved-periodic(lambda={self.lam})"

    def reset(self):
        self.counter = 0

    def decide(self, age, rate):
        # both triggers restart the cycle count
        if rate - self.alpha * (age + 1) <= 0 or self.counter + 1 >= self.lam:
            self.counter = 0
            return VERIFY
        self.counter += 1
        return TRANSMIT
