"""Named presets that regenerate the data behind each figure at desk scale.

Each preset returns a list of ``Table`` objects; the CLI writes them out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import aloha
from .policy import ImprovedPeriodic, Oracle, Periodic, QLearning, QLearnParams
from .service import Constant, TwoPoint
from .single_link import SingleLinkRun, pareto_sweep, run, simulate

DEFAULT_SEED = 20240601

PARETO_COLUMNS = ["family", "alpha", "average_aot", "throughput", "objective", "policy"]
TRACE_COLUMNS = ["t", "rate", "indicator", "age"]

CONSTANT_ALPHAS = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
TWOPOINT_ALPHAS = [0.1, 0.3, 1.0, 3.0]
FIG5_ALPHAS = [0.005, 0.01, 0.02, 0.04]
FRONTIER_ALPHAS = [0.002, 0.005, 0.01, 0.02, 0.04]


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[dict]
    meta: dict = field(default_factory=dict)


def trace_rows(trace) -> list[dict]:
    return [r._asdict() for r in trace.slots()]


def fig2(seed: int, workers: int = 1) -> list[Table]:
    res = run(SingleLinkRun(Constant(7.0), Periodic(), 1.0, 16, seed))
    return [Table("trace", TRACE_COLUMNS, trace_rows(res.trace),
                  {"process": "constant:7", "alpha": 1.0, "policy": res.descriptor})]


def fig3(seed: int, workers: int = 1) -> list[Table]:
    res = run(SingleLinkRun(TwoPoint(1.0, 10.0, 0.5), ImprovedPeriodic(), 1.0, 30, seed))
    return [Table("trace", TRACE_COLUMNS, trace_rows(res.trace),
                  {"process": "twopoint:1,10,0.5", "alpha": 1.0, "policy": res.descriptor})]


def fig5(seed: int = 0, workers: int = 1) -> list[Table]:
    K, rho, beta, m = 30, 0.5, 1.5, 15
    rows = []
    for a in FIG5_ALPHAS:
        best = aloha.optimal_mt(K, rho, m, beta, a)
        for mt in range(1, m + 1):
            h = aloha.weighted_objective_h(aloha.AlohaConfig(K, rho, m, mt, beta), a)
            rows.append({"alpha": a, "m_t": mt, "h": h, "optimal": mt == best})
    return [Table("h_vs_mt", ["alpha", "m_t", "h", "optimal"], rows,
                  {"K": K, "rho": rho, "beta": beta, "m": m})]


def fig6(seed: int = 0, workers: int = 1) -> list[Table]:
    K, rho, beta = 30, 0.5, 1.5
    rows = []
    for a in FIG5_ALPHAS:
        scan = aloha.frame_scan(K, rho, beta, a, range(1, 101))
        best = max(scan, key=lambda o: o.h).m
        rows += [{"alpha": a, "m": o.m, "m_t": o.m_t, "h": o.h, "optimal": o.m == best} for o in scan]
    return [Table("h_vs_m", ["alpha", "m", "m_t", "h", "optimal"], rows, {"K": K, "rho": rho, "beta": beta})]


CONSTANT_FAMILIES = [("periodic", Periodic()), ("qlearning", QLearning(QLearnParams())), ("oracle", Oracle())]


def _pareto_table(process, families, alphas, horizon, seed, workers) -> Table:
    rows = []
    for name, fam in families:
        for p in pareto_sweep(process, fam, alphas, horizon, seed, workers):
            rows.append({"family": name, "alpha": p.alpha, "average_aot": p.average_aot,
                         "throughput": p.throughput, "objective": p.objective, "policy": p.policy_descriptor})
    return Table("pareto", PARETO_COLUMNS, rows,
                 {"process": process.describe(), "alphas": list(alphas), "horizon": horizon, "seed": seed})


def fig7(seed: int, workers: int = 1) -> list[Table]:
    # divisible by every period 1..12, so each constant-rate point is exact
    horizon = 110_880
    return [_pareto_table(Constant(7.0), CONSTANT_FAMILIES, CONSTANT_ALPHAS, horizon, seed, workers)]


def fig8(seed: int, workers: int = 1) -> list[Table]:
    """Running average objective per scheme at alpha = 1 on the two-point process."""
    process, alpha, horizon, every = TwoPoint(1.0, 10.0, 0.5), 1.0, 200_000, 2_000
    rows = []
    for name, kind in [("periodic", Periodic()), ("improved", ImprovedPeriodic()),
                       ("qlearning", QLearning()), ("oracle", Oracle())]:
        policy = kind.build(process, alpha, seed)
        trace = simulate(process, policy, horizon, seed)
        served = (1 - trace.indicators) * trace.rates
        cum = (served - alpha * trace.ages).cumsum()
        for t in range(every, horizon + 1, every):
            rows.append({"scheme": name, "t": t, "running_objective": float(cum[t - 1] / t),
                         "policy": policy.descriptor})
    return [Table("objective_vs_time", ["scheme", "t", "running_objective", "policy"], rows,
                  {"process": process.describe(), "alpha": alpha, "seed": seed})]


def fig9(seed: int, workers: int = 1) -> list[Table]:
    horizon = 100_000
    families = [("periodic", Periodic()), ("improved", ImprovedPeriodic()),
                ("qlearning", QLearning()), ("oracle", Oracle())]
    return [_pareto_table(TwoPoint(1.0, 10.0, 0.5), families, TWOPOINT_ALPHAS, horizon, seed, workers)]


def fig10(seed: int = 0, workers: int = 1) -> list[Table]:
    rho, alpha = 0.5, 0.01
    rows = []
    for K in (10, 20, 30, 40):
        for beta in (1.2, 1.5, 2.0):
            scan = aloha.frame_scan(K, rho, beta, alpha, range(1, 101))
            best = max(scan, key=lambda o: o.h).m
            rows += [{"K": K, "beta": beta, "m": o.m, "m_t": o.m_t, "h": o.h, "optimal": o.m == best}
                     for o in scan]
    return [Table("h_vs_m", ["K", "beta", "m", "m_t", "h", "optimal"], rows, {"rho": rho, "alpha": alpha})]


def fig11(seed: int = 0, workers: int = 1) -> list[Table]:
    rho = 0.5
    rows = []
    for K in (20, 30, 40):
        for beta in (1.2, 1.5, 2.0):
            for p in aloha.aloha_frontier(K, rho, beta, FRONTIER_ALPHAS, range(1, 101)):
                rows.append({"K": K, "beta": beta, "alpha": p.alpha, "m": p.m, "m_t": p.m_t,
                             "aot_paper": p.avg_aot_paper, "eta": p.eta, "h": p.h})
    return [Table("frontier", ["K", "beta", "alpha", "m", "m_t", "aot_paper", "eta", "h"], rows,
                  {"rho": rho, "alphas": FRONTIER_ALPHAS})]


FIGURES = {
    "fig2": (fig2, "AoT trace, periodic verification, constant rate 7, alpha 1"),
    "fig3": (fig3, "AoT trace, improved periodic verification, rate 1 or 10, alpha 1"),
    "fig5": (fig5, "h(m, m_t) versus m_t, K=30 rho=0.5 beta=1.5 m=15"),
    "fig6": (fig6, "h(m, m_t*) versus m, K=30 rho=0.5 beta=1.5"),
    "fig7": (fig7, "AoT/throughput trade-off and objective per alpha, constant rate 7"),
    "fig8": (fig8, "running objective per scheme, rate 1 or 10, alpha 1"),
    "fig9": (fig9, "AoT/throughput trade-off per scheme, rate 1 or 10"),
    "fig10": (fig10, "h(m, m_t*) versus m for several K and beta, rho=0.5 alpha=0.01"),
    "fig11": (fig11, "ALOHA AoT/throughput frontier for several K and beta"),
}

STOCHASTIC_FIGURES = {"fig3", "fig7", "fig8", "fig9"}
