"""Tabular Q-learning over (observed rate, previous age) states."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..core import TRANSMIT, VERIFY, stream
from ..service import ServiceProcess, distinct_support
from .base import TablePolicy
from .markov import default_max_age

QTABLE_FORMAT = "aotkit.qtable"
QTABLE_VERSION = 1


@dataclass(frozen=True)
class QLearnParams:
    epsilon0: float = 1.0
    epsilon_decay_period: int = 1000
    epsilon_decay_factor: float = 0.95
    epsilon_floor: float = 0.01
    gamma: float = 0.95
    learning_rate: float = 0.1
    # step size of the k-th update of a (state, action) pair:
    # max(1 / (k + 1), learning_rate / (1 + k / lr_scale) ** lr_decay)
    lr_decay: float = 0.6
    lr_scale: float = 1000.0
    max_age_cap: int | None = None
    training_slots: int = 200_000
    convergence_tol: float = 1e-6

    def __post_init__(self):
        if not 0 <= self.epsilon0 <= 1:
            raise ValueError("epsilon0 must be a probability")
        if self.epsilon_decay_period < 1:
            raise ValueError("epsilon_decay_period must be a positive integer")
        if not 0 < self.epsilon_decay_factor <= 1:
            raise ValueError("epsilon_decay_factor must lie in (0, 1]")
        if not 0 <= self.epsilon_floor <= 1:
            raise ValueError("epsilon_floor must be a probability")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if not 0 <= self.lr_decay <= 1:
            raise ValueError("lr_decay must lie in [0, 1]")
        if not self.lr_scale > 0:
            raise ValueError("lr_scale must be positive")
        if self.max_age_cap is not None and self.max_age_cap < 1:
            raise ValueError("max_age_cap must be a positive integer")
        if self.training_slots < 1:
            raise ValueError("training_slots must be a positive integer")


@dataclass
class QTable:
    """Action values ``q[r, n, a]`` for rate ``rates[r]``, previous age ``n`` and action ``a``."""

    rates: tuple[float, ...]
    q: np.ndarray
    visits: np.ndarray
    alpha: float
    slots_trained: int = 0
    converged: bool = False
    cap_hit: bool = False

    @property
    def max_age(self) -> int:
        return self.q.shape[1] - 1

    def _idx(self, rate: float, age: int) -> tuple[int, int]:
        return self.rates.index(float(rate)), min(int(age), self.max_age)

    def value(self, rate: float, age: int, action: int) -> float:
        r, n = self._idx(rate, age)
        return float(self.q[r, n, action])

    def set_value(self, rate: float, age: int, action: int, value: float) -> None:
        r, n = self._idx(rate, age)
        self.q[r, n, action] = value
        self.visits[r, n, action] = max(1, self.visits[r, n, action])

    @classmethod
    def empty(cls, rates, max_age: int, alpha: float = 0.0) -> "QTable":
        shape = (len(rates), max_age + 1, 2)
        return cls(tuple(float(r) for r in rates), np.zeros(shape), np.zeros(shape, dtype=np.int64), alpha)

    def to_dict(self) -> dict:
        entries = []
        for r, rate in enumerate(self.rates):
            for n in range(self.max_age + 1):
                if self.visits[r, n].any():
                    entries.append({
                        "rate": rate,
                        "age": n,
                        "q": [float(self.q[r, n, 0]), float(self.q[r, n, 1])],
                        "visits": [int(self.visits[r, n, 0]), int(self.visits[r, n, 1])],
                    })
        return {
            "format": QTABLE_FORMAT,
            "version": QTABLE_VERSION,
            "alpha": self.alpha,
            "rates": list(self.rates),
            "max_age": self.max_age,
            "slots_trained": self.slots_trained,
            "converged": self.converged,
            "cap_hit": self.cap_hit,
            "entries": entries,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "QTable":
        if doc.get("format") != QTABLE_FORMAT:
            raise ValueError(f"not a Q-table document: format={doc.get('format')!r}")
        if doc.get("version") != QTABLE_VERSION:
            raise ValueError(f"unsupported Q-table version {doc.get('version')!r}")
        table = cls.empty(doc["rates"], int(doc["max_age"]), float(doc["alpha"]))
        for e in doc["entries"]:
            r = table.rates.index(float(e["rate"]))
            table.q[r, e["age"]] = e["q"]
            table.visits[r, e["age"]] = e["visits"]
        table.slots_trained = int(doc.get("slots_trained", 0))
        table.converged = bool(doc.get("converged", False))
        table.cap_hit = bool(doc.get("cap_hit", False))
        return table

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "QTable":
        return cls.from_dict(json.loads(text))


def train_qlearning(process: ServiceProcess, alpha: float, params: QLearnParams = QLearnParams(),
                    seed: int | None = None) -> QTable:
    """Epsilon-greedy Q-learning on the single-link verification problem.

    Rates are drawn from ``process`` (stream of ``seed``, or the process seed);
    exploration uses a separate stream of the same seed. Training stops at
    ``training_slots`` or once every update in a window of 10 |S| slots moved
    a value by less than ``convergence_tol``.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if not process.observable:
        raise ValueError("Q-learning needs the instantaneous service rate to be observable")
    rates, _ = distinct_support(process)
    if not np.all(np.isfinite(rates)):
        raise ValueError("Q-learning needs a finite rate support")
    seed = process.seed if seed is None else seed
    if params.max_age_cap:
        N = params.max_age_cap
    elif alpha == 0:
        # the age earns no penalty, so one capped age level loses nothing
        N = 1
    else:
        N = default_max_age(float(rates.max()), alpha)
    table = QTable.empty(rates, N, alpha)
    q, visits = table.q, table.visits

    T = params.training_slots
    index = {float(r): k for k, r in enumerate(rates)}
    mu_seq = process.reseed(seed).sample_rates(T + 1)
    r_seq = [index[m] for m in mu_seq.tolist()]
    mu_seq = mu_seq.tolist()
    rng = stream(seed, "exploration")
    explore_u = rng.random(T).tolist()
    explore_a = rng.integers(0, 2, T).tolist()

    eta0, gamma = params.learning_rate, params.gamma
    decay, scale = params.lr_decay, params.lr_scale
    eps = params.epsilon0
    window = 10 * len(rates) * (N + 1)
    recent = deque(maxlen=window)
    big_updates = 0  # updates in the window at or above tolerance

    age = 0
    t = 0
    for t in range(T):
        r, mu = r_seq[t], mu_seq[t]
        n = min(age, N)
        if explore_u[t] <= eps:
            a = explore_a[t]
        else:
            a = VERIFY if q[r, n, 1] > q[r, n, 0] else TRANSMIT
        if a == VERIFY:
            age, reward = 0, 0.0
        else:
            age += 1
            reward = mu - alpha * age
            if age >= N:
                table.cap_hit = True
        r2, n2 = r_seq[t + 1], min(age, N)
        target = reward + gamma * max(q[r2, n2, 0], q[r2, n2, 1])
        k = visits[r, n, a]
        # the first update copies its target, so no state keeps the zero start
        eta = max(1.0 / (k + 1), eta0 / (1 + k / scale) ** decay)
        delta = eta * (target - q[r, n, a])
        q[r, n, a] += delta
        visits[r, n, a] += 1

        big = abs(delta) >= params.convergence_tol
        if len(recent) == window and recent[0]:
            big_updates -= 1
        recent.append(big)
        big_updates += big
        if (t + 1) % params.epsilon_decay_period == 0:
            eps = max(eps * params.epsilon_decay_factor, params.epsilon_floor)
        if len(recent) == window and big_updates == 0:
            table.converged = True
            break

    table.slots_trained = t + 1
    return table


def greedy_policy(table: QTable) -> TablePolicy:
    """Argmax rule of a trained table; ties go to transmit.

    A state counts as learned only once both actions were tried there; the
    rest fall back to transmit and are flagged when queried.
    """
    known = (table.visits > 0).all(axis=2)
    verify = (table.q[:, :, 1] > table.q[:, :, 0]) & known
    return TablePolicy(table.rates, verify, known, descriptor="q-learning")
