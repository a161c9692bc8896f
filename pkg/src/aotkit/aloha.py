"""Trust-enhanced frame-slotted ALOHA: closed forms, slot-allocation optimizer and a frame simulator.

Ages here are counted in frames. Each frame has ``m`` slots of which ``m_t``
are trust-enhanced (longer by a factor ``beta``); a sensor is verified when its
packet succeeds in a trust-enhanced slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import batch_stderr, stream


class ClosedFormError(ValueError):
    pass


@dataclass(frozen=True)
class AlohaConfig:
    K: int
    rho: float
    m: int
    m_t: int
    beta: float
    T_s: float = 1.0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if not 0 <= self.m_t <= self.m:
            raise ValueError(f"m_t must lie in [0, m={self.m}], got {self.m_t}")
        if not self.beta > 1:
            raise ValueError(f"beta must exceed 1, got {self.beta}")
        if not self.T_s > 0:
            raise ValueError(f"T_s must be positive, got {self.T_s}")

    @property
    def frame_duration(self) -> float:
        return self.m_t * self.beta * self.T_s + (self.m - self.m_t) * self.T_s

    def with_mt(self, m_t: int) -> "AlohaConfig":
        return replace(self, m_t=m_t)


def success_probability(cfg: AlohaConfig) -> float:
    return cfg.rho * (1 - cfg.rho / cfg.m) ** (cfg.K - 1)


def verification_probability(cfg: AlohaConfig) -> float:
    return cfg.m_t / cfg.m * success_probability(cfg)


def _require_verification(cfg: AlohaConfig) -> float:
    p_t = verification_probability(cfg)
    if p_t <= 0:
        raise ValueError("AoT unbounded: verification probability is zero")
    return p_t


def average_aot_paper(cfg: AlohaConfig) -> float:
    """1 / (2 P_t): the closed form used by the slot-allocation objective."""
    return 1 / (2 * _require_verification(cfg))


def average_aot_exact(cfg: AlohaConfig) -> float:
    """Renewal-reward time average of the per-frame age, (1 - P_t) / P_t.

    The age is 0 at the end of a verifying frame and grows by one per frame,
    so a cycle of N frames carries ages 0..N-1 with N ~ Geometric(P_t).
    """
    p_t = _require_verification(cfg)
    return (1 - p_t) / p_t


def throughput(cfg: AlohaConfig) -> float:
    return cfg.K * success_probability(cfg) / cfg.frame_duration


def weighted_objective_h(cfg: AlohaConfig, alpha: float) -> float:
    if cfg.m_t < 1:
        raise ValueError("h(m, m_t) needs m_t >= 1")
    p_s = success_probability(cfg)
    if p_s == 0:
        # nothing ever gets through, so the age is unbounded
        return -math.inf if alpha > 0 else 0.0
    return (cfg.K * p_s / (cfg.T_s * (cfg.m + (cfg.beta - 1) * cfg.m_t))
            - alpha * cfg.m / (2 * cfg.m_t * p_s))


@dataclass(frozen=True)
class AlohaAnalytics:
    p_s: float
    p_t: float
    frame_duration: float
    avg_aot_paper: float
    avg_aot_exact: float
    eta: float
    h: float | None


def analyze(cfg: AlohaConfig, alpha: float | None = None) -> AlohaAnalytics:
    p_t = verification_probability(cfg)
    bounded = p_t > 0
    return AlohaAnalytics(
        p_s=success_probability(cfg),
        p_t=p_t,
        frame_duration=cfg.frame_duration,
        avg_aot_paper=average_aot_paper(cfg) if bounded else math.inf,
        avg_aot_exact=average_aot_exact(cfg) if bounded else math.inf,
        eta=throughput(cfg),
        h=weighted_objective_h(cfg, alpha) if alpha is not None and cfg.m_t >= 1 else None,
    )


def closed_form_mt(K: int, rho: float, m: int, beta: float, alpha: float) -> float:
    """Stationary point of h in m_t (real-valued)."""
    p_s = success_probability(AlohaConfig(K, rho, m, 0, beta))
    root = math.sqrt(alpha * m)
    denom = math.sqrt(2 * K * (beta - 1)) * p_s - root * (beta - 1)
    if denom <= 0:
        raise ClosedFormError("alpha too large for closed form; fall back to exhaustive scan")
    return m * root / denom


def _argmax_mt(K, rho, m, beta, alpha, candidates) -> int:
    best, best_h = None, -math.inf
    for mt in sorted(set(candidates)):
        h = weighted_objective_h(AlohaConfig(K, rho, m, mt, beta), alpha)
        if best is None or h > best_h:
            best, best_h = mt, h
    return best


def optimal_mt(K: int, rho: float, m: int, beta: float, alpha: float) -> int:
    """Closed-form m_t, rounded up and down (clamped to [1, m]), keeping the better one."""
    x = closed_form_mt(K, rho, m, beta, alpha)
    cands = [min(max(c, 1), m) for c in (math.floor(x), math.ceil(x))]
    return _argmax_mt(K, rho, m, beta, alpha, cands)


def scan_mt(K: int, rho: float, m: int, beta: float, alpha: float) -> int:
    """Exhaustive argmax of h over m_t in [1, m]; ties go to the smaller m_t."""
    return _argmax_mt(K, rho, m, beta, alpha, range(1, m + 1))


@dataclass(frozen=True)
class FrameOptimum:
    m: int
    m_t: int
    h: float
    closed_form: bool


def best_mt_for_m(K, rho, m, beta, alpha) -> tuple[int, bool]:
    try:
        return optimal_mt(K, rho, m, beta, alpha), True
    except ClosedFormError:
        return scan_mt(K, rho, m, beta, alpha), False


def frame_scan(K: int, rho: float, beta: float, alpha: float, m_range) -> list[FrameOptimum]:
    """Best m_t and its h for every m in ``m_range``."""
    out = []
    for m in m_range:
        if m < 1:
            raise ValueError("every m must be >= 1")
        mt, closed = best_mt_for_m(K, rho, m, beta, alpha)
        out.append(FrameOptimum(m, mt, weighted_objective_h(AlohaConfig(K, rho, m, mt, beta), alpha), closed))
    return out


def optimal_frame(K: int, rho: float, beta: float, alpha: float, m_range) -> FrameOptimum:
    scan = frame_scan(K, rho, beta, alpha, m_range)
    if not scan:
        raise ValueError("m_range is empty")
    best = scan[0]
    for opt in scan[1:]:
        if opt.h > best.h:
            best = opt
    return best


@dataclass(frozen=True)
class FrontierPoint:
    alpha: float
    m: int
    m_t: int
    avg_aot_paper: float
    eta: float
    h: float


def aloha_frontier(K: int, rho: float, beta: float, alphas, m_range) -> list[FrontierPoint]:
    """AoT/throughput trade-off with (m, m_t) re-optimized at each alpha."""
    m_range = list(m_range)
    out = []
    for a in alphas:
        opt = optimal_frame(K, rho, beta, a, m_range)
        cfg = AlohaConfig(K, rho, opt.m, opt.m_t, beta)
        out.append(FrontierPoint(float(a), opt.m, opt.m_t, average_aot_paper(cfg), throughput(cfg), opt.h))
    return out


@dataclass(frozen=True)
class FrameSimResult:
    n_frames: int
    p_s: float
    p_s_stderr: float
    p_t: float
    p_t_stderr: float
    avg_age: float
    avg_age_stderr: float
    eta: float
    eta_stderr: float


def simulate_frames(cfg: AlohaConfig, n_frames: int, seed: int, layout: str = "prefix",
                    chunk: int = 50_000) -> FrameSimResult:
    """Monte Carlo of the frame protocol.

    ``layout="prefix"`` makes the first m_t slots trust-enhanced; ``"random"``
    draws a fresh set of m_t trust-enhanced slots every frame. Ages start at 0.
    Success/verification standard errors treat frames as i.i.d.; the age error
    uses batch means because ages are autocorrelated.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    if layout not in ("prefix", "random"):
        raise ValueError(f"unknown slot layout {layout!r}")
    K, m, mt = cfg.K, cfg.m, cfg.m_t
    rng = stream(seed, "frames")
    layout_rng = stream(seed, "layout")

    succ_per_frame = np.empty(n_frames)
    ver_per_frame = np.empty(n_frames)
    age_per_frame = np.empty(n_frames)
    carry = np.zeros(K, dtype=np.int64)

    for start in range(0, n_frames, chunk):
        F = min(chunk, n_frames - start)
        active = rng.random((F, K)) < cfg.rho
        slot = rng.integers(0, m, (F, K))
        cell = np.arange(F)[:, None] * m + slot
        counts = np.bincount(cell[active], minlength=F * m)
        success = active & (counts[cell] == 1)
        if layout == "prefix":
            trusted = slot < mt
        else:
            # rank of each slot under a per-frame random permutation
            ranks = np.argsort(layout_rng.random((F, m)), axis=1).argsort(axis=1)
            trusted = np.take_along_axis(ranks, slot, axis=1) < mt
        verified = success & trusted

        idx = np.arange(F)[:, None]
        last = np.maximum.accumulate(np.where(verified, idx, -1), axis=0)
        ages = np.where(last >= 0, idx - last, carry[None, :] + idx + 1)
        carry = ages[-1]

        sl = slice(start, start + F)
        succ_per_frame[sl] = success.sum(axis=1)
        ver_per_frame[sl] = verified.sum(axis=1)
        age_per_frame[sl] = ages.mean(axis=1)

    tf = cfg.frame_duration
    p_s = succ_per_frame.mean() / K
    p_t = ver_per_frame.mean() / K
    sd = lambda x: float(x.std(ddof=1) / math.sqrt(n_frames)) if n_frames > 1 else 0.0
    return FrameSimResult(
        n_frames=n_frames,
        p_s=float(p_s),
        p_s_stderr=sd(succ_per_frame) / K,
        p_t=float(p_t),
        p_t_stderr=sd(ver_per_frame) / K,
        avg_age=float(age_per_frame.mean()),
        avg_age_stderr=batch_stderr(age_per_frame),
        eta=float(succ_per_frame.mean() / tf),
        eta_stderr=sd(succ_per_frame) / tf,
    )
