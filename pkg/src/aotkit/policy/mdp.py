"""Exact average-reward baseline for single-link verification scheduling.

States are (rate, previous age) with ages 0..N; at age N only verification is
allowed. Because rates are i.i.d., the expectation over the next rate reduces
to a probability-weighted column sum of the bias table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..service import ServiceProcess, distinct_support, mean_rate
from .base import NeverVerify, TablePolicy, VerificationPolicy
from .markov import StationaryDistribution, default_max_age, table_gain


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleParams:
    max_age: int | None = None
    tol: float = 1e-9
    max_iter: int = 200_000
    # aperiodicity transform weight; deterministic cycles oscillate without it
    tau: float = 0.5


@dataclass
class OracleSolution:
    policy: VerificationPolicy
    gain: float
    bias: np.ndarray | None
    iterations: int
    residual: float
    evaluated_gain: float
    stationary: StationaryDistribution | None
    cap_reached: bool


def solve_mdp_oracle(process: ServiceProcess, alpha: float, max_age: int | None = None,
                     params: OracleParams = OracleParams()) -> OracleSolution:
    """Optimal stationary policy and gain by relative value iteration.

    ``gain`` is the midpoint of the final span bounds; ``evaluated_gain`` is the
    chosen policy re-evaluated through its stationary distribution, an
    independent check on the iteration. ``cap_reached`` reports whether the
    policy's recurrent ages include the cap N.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    rates, probs = distinct_support(process)
    if alpha == 0:
        # no age penalty: transmitting is always at least as good
        mu = mean_rate(process)
        return OracleSolution(NeverVerify(), mu, None, 0, 0.0, mu, None, False)

    N = max_age if max_age is not None else params.max_age
    N = default_max_age(float(rates.max()), alpha) if N is None else int(N)
    if N < 1:
        raise ValueError("max_age must be >= 1")
    ages = np.arange(N + 1)
    tx_reward = rates[:, None] - alpha * (ages[None, :] + 1)  # (R, N+1)
    tau = params.tau

    h = np.zeros((len(rates), N + 1))
    residual = math.inf
    for it in range(1, params.max_iter + 1):
        w = probs @ h  # expected bias of each next age
        q_verify = np.broadcast_to(w[0], h.shape)
        q_tx = np.full(h.shape, -np.inf)
        q_tx[:, :-1] = tx_reward[:, :-1] + w[None, 1:]
        th = np.maximum(q_verify, q_tx)
        d = th - h
        lo, hi = float(d.min()), float(d.max())
        residual = hi - lo
        if residual < params.tol:
            break
        h = h + tau * d
        h -= h[0, 0]
    else:
        raise ConvergenceError(
            f"relative value iteration did not converge in {params.max_iter} iterations "
            f"(span residual {residual:.3e})"
        )
    gain = 0.5 * (lo + hi)

    w = probs @ h
    q_verify = np.broadcast_to(w[0], h.shape)
    q_tx = np.full(h.shape, -np.inf)
    q_tx[:, :-1] = tx_reward[:, :-1] + w[None, 1:]
    scale = max(1.0, float(np.abs(h).max()))
    # near-ties go to transmit, matching the greedy tie-break
    verify = q_verify > q_tx + 1e-9 * scale
    verify[:, -1] = True

    evaluated, dist = table_gain(verify, rates, probs, alpha)
    policy = TablePolicy(rates, verify, descriptor="oracle")
    return OracleSolution(
        policy=policy,
        gain=gain,
        bias=h,
        iterations=it,
        residual=residual,
        evaluated_gain=evaluated,
        stationary=dist,
        cap_reached=bool(dist.pi[-1] > 0),
    )
