"""Command-line front end.

    aotkit single-link run|sweep|qtrain [flags]
    aotkit aloha analyze|optimize|simulate [flags]
    aotkit reproduce <figure-id>
    aotkit run <config.json>
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__, aloha
from .config import ConfigError, ExperimentConfig, parse_config, parse_float_list, parse_policy_spec, parse_process_spec
from .figures import DEFAULT_SEED, FIGURES, PARETO_COLUMNS, TRACE_COLUMNS, Table, trace_rows
from .io import write_csv, write_json
from .policy import (
    ConvergenceError,
    ImprovedPeriodic,
    Never,
    Oracle,
    OracleParams,
    Periodic,
    QLearning,
    QLearnParams,
    QTable,
    Table as TableKind,
    TablePolicy,
    Threshold,
    greedy_policy,
    train_qlearning,
)
from .service import Categorical, Constant, ServiceProcess, TwoPoint
from .single_link import ObservabilityError, SingleLinkRun, pareto_sweep, run

log = logging.getLogger("aotkit")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODEL = 3
EXIT_CONVERGENCE = 4
EXIT_IO = 5

ALOHA_COLUMNS = [
    "K", "rho", "m", "m_t", "beta", "alpha", "p_s", "p_t", "aot_paper", "aot_exact", "eta", "h",
    "source", "p_s_stderr", "p_t_stderr", "aot_stderr", "eta_stderr",
]

AOT_NOTE = (
    "aot_paper = 1/(2 P_t) is the closed form used by the slot-allocation objective; "
    "aot_exact = (1 - P_t)/P_t is the renewal-reward time average of the per-frame age, "
    "which is what the frame simulator measures. The two differ by design."
)


# -- building domain objects from validated params -----------------------------

def build_process(p: dict, seed: int | None) -> ServiceProcess:
    kw = {"seed": seed or 0, "observable": p.get("knowledge", "instantaneous") == "instantaneous"}
    if p["kind"] == "constant":
        return Constant(p["rate"], **kw)
    if p["kind"] == "twopoint":
        return TwoPoint(p["low"], p["high"], p["p_high"], **kw)
    return Categorical(tuple(p["rates"]), tuple(p["weights"]), **kw)


def build_policy(params: dict):
    p = params["policy"]
    kind = p["kind"]
    if kind == "periodic":
        return Periodic(None if p["period"] == "auto" else p["period"])
    if kind == "improved":
        return ImprovedPeriodic(None if p["period"] == "auto" else p["period"])
    if kind == "threshold":
        return Threshold(p["n"])
    if kind == "never":
        return Never()
    if kind == "oracle":
        return Oracle(OracleParams(**params.get("oracle", {})))
    if kind == "qlearning":
        table = QTable.loads(Path(p["table"]).read_text()) if p.get("table") else None
        return QLearning(QLearnParams(**params.get("qlearning", {})), table)
    return TableKind(TablePolicy.loads(Path(p["table"]).read_text()))


# -- experiments -------------------------------------------------------------

def _single_link_run(cfg: ExperimentConfig):
    params = cfg.params
    process = build_process(params["process"], cfg.seed)
    res = run(SingleLinkRun(process, build_policy(params), params["alpha"], params["horizon"], cfg.seed))
    m = res.metrics
    metrics_row = {"alpha": m.alpha, "average_aot": m.average_aot, "throughput": m.throughput,
                   "objective": m.objective, "horizon": m.horizon, "policy": res.descriptor}
    summary = {"policy": res.descriptor, "coverage_misses": getattr(res.policy, "coverage_misses", 0)}
    if hasattr(res.policy, "lam"):
        summary["lambda"] = res.policy.lam
    tables = [
        Table("metrics", list(metrics_row), [metrics_row]),
        Table("trace", TRACE_COLUMNS, trace_rows(res.trace)),
    ]
    return tables, summary, {}


def _single_link_sweep(cfg: ExperimentConfig):
    params = cfg.params
    process = build_process(params["process"], cfg.seed)
    points = pareto_sweep(process, build_policy(params), params["alphas"], params["horizon"], cfg.seed, cfg.workers)
    family = params["policy"]["kind"]
    rows = [{"family": family, "alpha": p.alpha, "average_aot": p.average_aot, "throughput": p.throughput,
             "objective": p.objective, "policy": p.policy_descriptor} for p in points]
    meta = {"alphas": params["alphas"], "horizon": params["horizon"], "process": process.describe()}
    return [Table("pareto", PARETO_COLUMNS, rows, meta)], meta, {}


def _qtrain(cfg: ExperimentConfig):
    params = cfg.params
    process = build_process(params["process"], cfg.seed)
    table = train_qlearning(process, params["alpha"], QLearnParams(**params["qlearning"]), cfg.seed)
    greedy = greedy_policy(table)
    rows = []
    for r, rate in enumerate(table.rates):
        for n in range(table.max_age + 1):
            if table.visits[r, n].any():
                rows.append({"rate": rate, "age": n, "q_transmit": float(table.q[r, n, 0]),
                             "q_verify": float(table.q[r, n, 1]), "visits_transmit": int(table.visits[r, n, 0]),
                             "visits_verify": int(table.visits[r, n, 1]), "action": int(greedy.verify[r, n])})
    cols = ["rate", "age", "q_transmit", "q_verify", "visits_transmit", "visits_verify", "action"]
    summary = {"slots_trained": table.slots_trained, "converged": table.converged, "cap_hit": table.cap_hit,
               "first_verify_age": dict(zip(map(repr, table.rates), greedy.first_verify_age()))}
    return [Table("qtable", cols, rows)], summary, {"qtable.json": table.to_dict()}


def _aloha_cfg(a: dict, m_t=None) -> aloha.AlohaConfig:
    return aloha.AlohaConfig(a["K"], a["rho"], a["m"], a["m_t"] if m_t is None else m_t, a["beta"], a["T_s"])


def _analytic_row(cfg: aloha.AlohaConfig, alpha) -> dict:
    an = aloha.analyze(cfg, alpha)
    return {"K": cfg.K, "rho": cfg.rho, "m": cfg.m, "m_t": cfg.m_t, "beta": cfg.beta, "alpha": alpha,
            "p_s": an.p_s, "p_t": an.p_t, "aot_paper": an.avg_aot_paper, "aot_exact": an.avg_aot_exact,
            "eta": an.eta, "h": an.h, "source": "analytic"}


def _alphas(a: dict) -> list:
    return a.get("alphas") or ([a["alpha"]] if "alpha" in a else [None])


def _aloha_analyze(cfg: ExperimentConfig):
    a = cfg.params["aloha"]
    rows = [_analytic_row(_aloha_cfg(a), alpha) for alpha in _alphas(a)]
    return [Table("aloha", ALOHA_COLUMNS, rows)], {"note": AOT_NOTE}, {}


def _aloha_optimize(cfg: ExperimentConfig):
    a = cfg.params["aloha"]
    m_range = range(a["m_min"], a["m_max"] + 1)
    scan_rows, best_rows, summary = [], [], {}
    for alpha in _alphas(a):
        scan = aloha.frame_scan(a["K"], a["rho"], a["beta"], alpha, m_range)
        best = aloha.optimal_frame(a["K"], a["rho"], a["beta"], alpha, m_range)
        for o in scan:
            scan_rows.append({"alpha": alpha, "m": o.m, "m_t": o.m_t, "h": o.h, "closed_form": o.closed_form})
        row = _analytic_row(aloha.AlohaConfig(a["K"], a["rho"], best.m, best.m_t, a["beta"], a["T_s"]), alpha)
        best_rows.append(row)
        summary[repr(alpha)] = {"m": best.m, "m_t": best.m_t, "h": best.h}
    return [
        Table("optimum", ALOHA_COLUMNS, best_rows),
        Table("frame_scan", ["alpha", "m", "m_t", "h", "closed_form"], scan_rows),
    ], summary, {}


def _aloha_simulate(cfg: ExperimentConfig):
    a = cfg.params["aloha"]
    c = _aloha_cfg(a)
    alpha = a.get("alpha")
    sim = aloha.simulate_frames(c, a["frames"], cfg.seed, a["layout"])
    analytic = _analytic_row(c, alpha)
    simulated = {"K": c.K, "rho": c.rho, "m": c.m, "m_t": c.m_t, "beta": c.beta, "alpha": alpha,
                 "p_s": sim.p_s, "p_t": sim.p_t, "aot_paper": None, "aot_exact": sim.avg_age, "eta": sim.eta,
                 "h": None, "source": "sim", "p_s_stderr": sim.p_s_stderr, "p_t_stderr": sim.p_t_stderr,
                 "aot_stderr": sim.avg_age_stderr, "eta_stderr": sim.eta_stderr}
    return [Table("aloha", ALOHA_COLUMNS, [analytic, simulated])], {"note": AOT_NOTE, "frames": a["frames"]}, {}


def _reproduce(cfg: ExperimentConfig):
    fig = cfg.params["figure"]
    func, description = FIGURES[fig]
    seed = DEFAULT_SEED if cfg.seed is None else cfg.seed
    tables = func(seed, cfg.workers)
    summary = {"figure": fig, "description": description, "seed": seed}
    for t in tables:
        summary[t.name] = t.meta
    return tables, summary, {}


DISPATCH = {
    "single-link-run": _single_link_run,
    "single-link-sweep": _single_link_sweep,
    "qtrain": _qtrain,
    "aloha-analyze": _aloha_analyze,
    "aloha-optimize": _aloha_optimize,
    "aloha-simulate": _aloha_simulate,
    "reproduce-figure": _reproduce,
}


def dispatch(cfg: ExperimentConfig) -> int:
    """Run one experiment and write its artifacts; returns a process exit status."""
    started = _dt.datetime.now(_dt.timezone.utc)
    t0 = time.perf_counter()
    try:
        tables, summary, documents = DISPATCH[cfg.experiment](cfg)
    except ConvergenceError as exc:
        log.error("convergence failure: %s", exc)
        return EXIT_CONVERGENCE
    except (ValueError, ObservabilityError, KeyError) as exc:
        log.error("experiment rejected: %s", exc)
        return EXIT_MODEL
    except OSError as exc:
        log.error("i/o failure: %s", exc)
        return EXIT_IO

    out = cfg.output_dir
    files = []
    try:
        for t in tables:
            if cfg.output_format in ("csv", "both"):
                files.append(write_csv(out / f"{t.name}.csv", t.columns, t.rows))
            if cfg.output_format in ("json", "both"):
                files.append(write_json(out / f"{t.name}.json", {"columns": t.columns, "rows": t.rows}))
        for name, doc in documents.items():
            files.append(write_json(out / name, doc))
        manifest = {
            "toolkit": "aotkit",
            "version": __version__,
            "experiment": cfg.experiment,
            "config": cfg.resolved(),
            "seed": cfg.seed,
            "entropy_seeded": cfg.entropy_seeded,
            "started_utc": started.isoformat(),
            "wall_time_s": time.perf_counter() - t0,
            "files": [p.name for p in files],
            "summary": summary,
        }
        write_json(out / "manifest.json", manifest)
    except OSError as exc:
        log.error("i/o failure: %s", exc)
        return EXIT_IO
    log.info("wrote %d files to %s", len(files) + 1, out)
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment document; flags override its values")
    p.add_argument("--out", help="output directory (default: $AOTKIT_OUTPUT_DIR, then ./results)")
    p.add_argument("--format", choices=["csv", "json", "both"])
    p.add_argument("--seed", type=int)
    p.add_argument("--entropy-seed", action="store_true", help="seed from OS entropy (recorded in the manifest)")
    p.add_argument("--workers", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def _single_link_flags(p: argparse.ArgumentParser, sweep=False) -> None:
    p.add_argument("--process", help="constant:7 | twopoint:1,10,0.5 | categorical:2@0.25,4@0.75")
    p.add_argument("--knowledge", choices=["instantaneous", "mean"])
    p.add_argument("--policy", help="periodic:auto|N improved:auto|N threshold:N qlearning[:file] oracle never table:file")
    p.add_argument("--alpha", type=float)
    if sweep:
        p.add_argument("--alphas", help="comma-separated weighting factors")
    p.add_argument("--horizon", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--training-slots", type=int)
    p.add_argument("--max-age", type=int, help="age cap for the Q-table and the oracle")


def _aloha_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", type=int, dest="K")
    p.add_argument("--rho", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--mt", type=int, dest="m_t")
    p.add_argument("--beta", type=float)
    p.add_argument("--Ts", type=float, dest="T_s")
    p.add_argument("--alpha", type=float)
    p.add_argument("--alphas")
    p.add_argument("--m-min", type=int)
    p.add_argument("--m-max", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--layout", choices=["prefix", "random"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aotkit", description="Age-of-trust verification scheduling toolkit")
    parser.add_argument("--version", action="version", version=f"aotkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sl = sub.add_parser("single-link", help="single-link verification experiments")
    sl_sub = sl.add_subparsers(dest="action", required=True)
    for name, sweep in (("run", False), ("sweep", True), ("qtrain", False)):
        p = sl_sub.add_parser(name)
        _common(p)
        _single_link_flags(p, sweep)

    al = sub.add_parser("aloha", help="trust-enhanced frame-slotted ALOHA")
    al_sub = al.add_subparsers(dest="action", required=True)
    for name in ("analyze", "optimize", "simulate"):
        p = al_sub.add_parser(name)
        _common(p)
        _aloha_flags(p)

    rp = sub.add_parser("reproduce", help="regenerate a figure's data")
    rp.add_argument("figure", choices=sorted(FIGURES, key=lambda f: int(f[3:])))
    _common(rp)

    rc = sub.add_parser("run", help="run the experiment described by a config file")
    rc.add_argument("config_file")
    _common(rc)
    return parser


EXPERIMENT_OF = {
    ("single-link", "run"): "single-link-run",
    ("single-link", "sweep"): "single-link-sweep",
    ("single-link", "qtrain"): "qtrain",
    ("aloha", "analyze"): "aloha-analyze",
    ("aloha", "optimize"): "aloha-optimize",
    ("aloha", "simulate"): "aloha-simulate",
}


def overrides_from_args(args: argparse.Namespace) -> dict:
    """Nested override document containing only the flags that were given."""
    g = lambda name: getattr(args, name, None)  # noqa: E731
    doc: dict = {}
    if args.command == "reproduce":
        doc["experiment"] = "reproduce-figure"
        doc["figure"] = args.figure
    elif args.command != "run":
        doc["experiment"] = EXPERIMENT_OF[(args.command, args.action)]
    if g("seed") is not None:
        doc["seed"] = args.seed
    if g("entropy_seed"):
        doc["entropy_seed"] = True
    if g("workers") is not None:
        doc["workers"] = args.workers
    output = {k: v for k, v in (("dir", g("out")), ("format", g("format"))) if v is not None}
    if output:
        doc["output"] = output

    if args.command == "single-link":
        if g("process"):
            doc["process"] = parse_process_spec(args.process)
        if g("knowledge"):
            doc.setdefault("process", {})["knowledge"] = args.knowledge
        if g("policy"):
            doc["policy"] = parse_policy_spec(args.policy)
        if g("alpha") is not None:
            doc["alpha"] = args.alpha
        if g("alphas"):
            doc["alphas"] = parse_float_list(args.alphas, "alphas")
        if g("horizon") is not None:
            doc["horizon"] = args.horizon
        q = {k: v for k, v in (("gamma", g("gamma")), ("learning_rate", g("learning_rate")),
                                ("training_slots", g("training_slots")), ("max_age_cap", g("max_age")))
             if v is not None}
        if q:
            doc["qlearning"] = q
        if g("max_age") is not None:
            doc["oracle"] = {"max_age": args.max_age}
    elif args.command == "aloha":
        a = {k: g(k) for k in ("K", "rho", "m", "m_t", "beta", "T_s", "alpha", "m_min", "m_max", "frames", "layout")
             if g(k) is not None}
        if g("alphas"):
            a["alphas"] = parse_float_list(args.alphas, "aloha.alphas")
        if a:
            doc["aloha"] = a
    return doc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    file = args.config_file if args.command == "run" else args.config
    try:
        cfg = parse_config(file, overrides_from_args(args))
    except ConfigError as exc:
        print(f"aotkit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status = dispatch(cfg)
    if status == EXIT_OK:
        print(json.dumps({"output": str(cfg.output_dir), "experiment": cfg.experiment}))
    return status


if __name__ == "__main__":
    sys.exit(main())
