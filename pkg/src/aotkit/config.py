"""Experiment configuration: JSON documents merged with command-line flags.

Precedence is flags > environment (output directory only) > file. Every key is
validated before dispatch and unknown keys are rejected by name.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

ENV_OUTPUT_DIR = "AOTKIT_OUTPUT_DIR"

EXPERIMENTS = (
    "single-link-run",
    "single-link-sweep",
    "qtrain",
    "aloha-analyze",
    "aloha-optimize",
    "aloha-simulate",
    "reproduce-figure",
)

# experiments that draw random numbers and therefore need a seed
STOCHASTIC = {"single-link-run", "single-link-sweep", "qtrain", "aloha-simulate"}

TOP_KEYS = {
    "experiment", "seed", "entropy_seed", "workers", "output", "process", "policy",
    "alpha", "alphas", "horizon", "qlearning", "oracle", "aloha", "figure",
}
OUTPUT_KEYS = {"dir", "format"}
PROCESS_KEYS = {"kind", "rate", "low", "high", "p_high", "rates", "weights", "knowledge"}
POLICY_KEYS = {"kind", "period", "n", "table"}
QLEARN_KEYS = {
    "epsilon0", "epsilon_decay_period", "epsilon_decay_factor", "epsilon_floor", "gamma",
    "learning_rate", "lr_decay", "lr_scale", "max_age_cap", "training_slots", "convergence_tol",
}
ORACLE_KEYS = {"max_age"}
ALOHA_KEYS = {"K", "rho", "m", "m_t", "beta", "T_s", "alpha", "alphas", "m_min", "m_max", "frames", "layout"}

REQUIRED = {
    "single-link-run": ("process", "policy", "alpha", "horizon"),
    "single-link-sweep": ("process", "policy", "alphas", "horizon"),
    "qtrain": ("process", "alpha"),
    "aloha-analyze": ("aloha.K", "aloha.rho", "aloha.m", "aloha.m_t", "aloha.beta"),
    "aloha-optimize": ("aloha.K", "aloha.rho", "aloha.beta"),
    "aloha-simulate": ("aloha.K", "aloha.rho", "aloha.m", "aloha.m_t", "aloha.beta", "aloha.frames"),
    "reproduce-figure": ("figure",),
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict
    seed: int | None = None
    entropy_seeded: bool = False
    output_dir: Path = Path("results")
    output_format: str = "csv"
    workers: int = 1
    source: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        """JSON-ready record of everything needed to re-run this experiment."""
        doc = copy.deepcopy(self.params)
        doc["experiment"] = self.experiment
        doc["seed"] = self.seed
        doc["workers"] = self.workers
        doc["output"] = {"dir": str(self.output_dir), "format": self.output_format}
        return doc


def deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_document(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be an object")
    return doc


# -- flag-string shorthands -------------------------------------------------

def parse_process_spec(text: str) -> dict:
    """``constant:7``, ``twopoint:1,10,0.5`` or ``categorical:2@0.25,4@0.75``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "constant":
            return {"kind": kind, "rate": float(rest)}
        if kind == "twopoint":
            low, high, p = (float(x) for x in rest.split(","))
            return {"kind": kind, "low": low, "high": high, "p_high": p}
        if kind == "categorical":
            pairs = [item.split("@") for item in rest.split(",")]
            return {"kind": kind, "rates": [float(v) for v, _ in pairs], "weights": [float(p) for _, p in pairs]}
    except ValueError as exc:
        raise ConfigError("process", f"cannot parse {text!r}: {exc}") from exc
    raise ConfigError("process.kind", f"unknown process kind {kind!r}")


def parse_policy_spec(text: str) -> dict:
    """``periodic:auto|<n>``, ``improved:auto|<n>``, ``threshold:<n>``, ``qlearning[:table.json]``,
    ``oracle``, ``never`` or ``table:<file>``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind in ("periodic", "improved"):
        return {"kind": kind, "period": rest or "auto"}
    if kind == "threshold":
        try:
            return {"kind": kind, "n": int(rest)}
        except ValueError as exc:
            raise ConfigError("policy.n", f"threshold needs an integer, got {rest!r}") from exc
    if kind in ("qlearning", "table"):
        return {"kind": kind, "table": rest or None}
    if kind in ("oracle", "never"):
        return {"kind": kind}
    raise ConfigError("policy.kind", f"unknown policy kind {kind!r}")


def parse_float_list(text: str, key: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(key, f"expected comma-separated numbers, got {text!r}") from exc


# -- validation --------------------------------------------------------------

def _check_keys(section: dict, allowed: set[str], prefix: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(prefix.rstrip("."), "expected an object")
    for k in section:
        if k not in allowed:
            raise ConfigError(f"{prefix}{k}", "unknown key")


def _num(v, key, *, lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {v!r}")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(key, f"expected an integer, got {v!r}")
        v = int(v)
    elif not math.isfinite(v):
        raise ConfigError(key, f"must be finite, got {v!r}")
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(key, f"out of range: must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and (v >= hi if hi_open else v > hi):
        raise ConfigError(key, f"out of range: must be {'<' if hi_open else '<='} {hi}, got {v}")
    return v if integer else float(v)


def _validate_process(p: dict) -> dict:
    _check_keys(p, PROCESS_KEYS, "process.")
    kind = p.get("kind")
    out = {"kind": kind, "knowledge": p.get("knowledge", "instantaneous")}
    if out["knowledge"] not in ("instantaneous", "mean"):
        raise ConfigError("process.knowledge", "must be 'instantaneous' or 'mean'")
    if kind == "constant":
        out["rate"] = _num(p.get("rate"), "process.rate", lo=0, lo_open=True)
    elif kind == "twopoint":
        out["low"] = _num(p.get("low"), "process.low", lo=0, lo_open=True)
        out["high"] = _num(p.get("high"), "process.high", lo=0, lo_open=True)
        out["p_high"] = _num(p.get("p_high"), "process.p_high", lo=0, hi=1)
    elif kind == "categorical":
        rates, weights = p.get("rates"), p.get("weights")
        if not isinstance(rates, list) or not isinstance(weights, list) or len(rates) != len(weights) or not rates:
            raise ConfigError("process.rates", "rates and weights must be nonempty lists of equal length")
        out["rates"] = [_num(v, "process.rates", lo=0, lo_open=True) for v in rates]
        out["weights"] = [_num(v, "process.weights", lo=0, hi=1) for v in weights]
        if abs(math.fsum(out["weights"]) - 1) > 1e-12:
            raise ConfigError("process.weights", "must sum to 1")
    else:
        raise ConfigError("process.kind", f"unknown process kind {kind!r}")
    return out


def _validate_policy(p: dict) -> dict:
    _check_keys(p, POLICY_KEYS, "policy.")
    kind = p.get("kind")
    out = {"kind": kind}
    if kind in ("periodic", "improved"):
        period = p.get("period", "auto")
        out["period"] = "auto" if period in ("auto", None) else _num(
            int(period) if isinstance(period, str) and period.isdigit() else period,
            "policy.period", lo=1, integer=True)
    elif kind == "threshold":
        out["n"] = _num(p.get("n"), "policy.n", lo=0, integer=True)
    elif kind in ("qlearning", "table"):
        table = p.get("table")
        if kind == "table" and not table:
            raise ConfigError("policy.table", "a table policy needs a file path")
        out["table"] = table
    elif kind not in ("oracle", "never"):
        raise ConfigError("policy.kind", f"unknown policy kind {kind!r}")
    return out


def _validate_qlearning(q: dict) -> dict:
    _check_keys(q, QLEARN_KEYS, "qlearning.")
    spec = {
        "epsilon0": dict(lo=0, hi=1),
        "epsilon_decay_period": dict(lo=1, integer=True),
        "epsilon_decay_factor": dict(lo=0, hi=1, lo_open=True),
        "epsilon_floor": dict(lo=0, hi=1),
        "gamma": dict(lo=0, hi=1, hi_open=True),
        "learning_rate": dict(lo=0, hi=1, lo_open=True),
        "lr_decay": dict(lo=0, hi=1),
        "lr_scale": dict(lo=0, lo_open=True),
        "max_age_cap": dict(lo=1, integer=True),
        "training_slots": dict(lo=1, integer=True),
        "convergence_tol": dict(lo=0, lo_open=True),
    }
    return {k: _num(v, f"qlearning.{k}", **spec[k]) for k, v in q.items() if v is not None}


def _validate_aloha(a: dict, experiment: str) -> dict:
    _check_keys(a, ALOHA_KEYS, "aloha.")
    out = {}
    if "K" in a:
        out["K"] = _num(a["K"], "aloha.K", lo=1, integer=True)
    if "rho" in a:
        out["rho"] = _num(a["rho"], "aloha.rho", lo=0, hi=1, lo_open=True)
    if "m" in a:
        out["m"] = _num(a["m"], "aloha.m", lo=1, integer=True)
    if "m_t" in a:
        out["m_t"] = _num(a["m_t"], "aloha.m_t", lo=0, integer=True)
        if "m" in out and out["m_t"] > out["m"]:
            raise ConfigError("aloha.m_t", f"invariant violated: m_t={out['m_t']} exceeds m={out['m']}")
    if "beta" in a:
        out["beta"] = _num(a["beta"], "aloha.beta", lo=1, lo_open=True)
    out["T_s"] = _num(a.get("T_s", 1.0), "aloha.T_s", lo=0, lo_open=True)
    if a.get("alpha") is not None:
        out["alpha"] = _num(a["alpha"], "aloha.alpha", lo=0)
    if a.get("alphas") is not None:
        if not isinstance(a["alphas"], list) or not a["alphas"]:
            raise ConfigError("aloha.alphas", "expected a nonempty list")
        out["alphas"] = [_num(v, "aloha.alphas", lo=0) for v in a["alphas"]]
    out["m_min"] = _num(a.get("m_min", 1), "aloha.m_min", lo=1, integer=True)
    out["m_max"] = _num(a.get("m_max", 100), "aloha.m_max", lo=1, integer=True)
    if out["m_max"] < out["m_min"]:
        raise ConfigError("aloha.m_max", "empty m range: m_max < m_min")
    if "frames" in a:
        out["frames"] = _num(a["frames"], "aloha.frames", lo=1, integer=True)
    out["layout"] = a.get("layout", "prefix")
    if out["layout"] not in ("prefix", "random"):
        raise ConfigError("aloha.layout", "must be 'prefix' or 'random'")
    if experiment == "aloha-optimize" and "alpha" not in out and "alphas" not in out:
        raise ConfigError("aloha.alpha", "missing required field (or give aloha.alphas)")
    return out


def _has(doc: dict, dotted: str) -> bool:
    cur = doc
    for part in dotted.split("."):
        if not isinstance(cur, dict) or cur.get(part) is None:
            return False
        cur = cur[part]
    return True


def validate(doc: dict, env: dict | None = None) -> ExperimentConfig:
    env = os.environ if env is None else env
    _check_keys(doc, TOP_KEYS, "")
    experiment = doc.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}; got {experiment!r}")
    for key in REQUIRED[experiment]:
        if not _has(doc, key):
            raise ConfigError(key, "missing required field")

    params: dict = {}
    if "process" in doc:
        params["process"] = _validate_process(doc["process"])
    if "policy" in doc:
        params["policy"] = _validate_policy(doc["policy"])
    if doc.get("alpha") is not None:
        params["alpha"] = _num(doc["alpha"], "alpha", lo=0)
    if doc.get("alphas") is not None:
        if not isinstance(doc["alphas"], list) or not doc["alphas"]:
            raise ConfigError("alphas", "expected a nonempty list of numbers")
        params["alphas"] = [_num(v, "alphas", lo=0) for v in doc["alphas"]]
    if doc.get("horizon") is not None:
        params["horizon"] = _num(doc["horizon"], "horizon", lo=1, integer=True)
    params["qlearning"] = _validate_qlearning(doc.get("qlearning") or {})
    oracle = doc.get("oracle") or {}
    _check_keys(oracle, ORACLE_KEYS, "oracle.")
    params["oracle"] = {k: _num(v, f"oracle.{k}", lo=1, integer=True) for k, v in oracle.items() if v is not None}
    if "aloha" in doc:
        params["aloha"] = _validate_aloha(doc["aloha"], experiment)
    if experiment == "reproduce-figure":
        from .figures import FIGURES
        if doc["figure"] not in FIGURES:
            raise ConfigError("figure", f"unknown figure {doc['figure']!r}; known: {', '.join(FIGURES)}")
        params["figure"] = doc["figure"]

    seed = doc.get("seed")
    entropy = bool(doc.get("entropy_seed", False))
    if seed is not None:
        seed = _num(seed, "seed", lo=0, integer=True)
    elif entropy:
        import numpy as np
        seed = int(np.random.SeedSequence().entropy)
    elif experiment in STOCHASTIC:
        raise ConfigError("seed", "missing required field (or request entropy seeding explicitly)")

    output = doc.get("output") or {}
    _check_keys(output, OUTPUT_KEYS, "output.")
    out_dir = output.get("dir") or env.get(ENV_OUTPUT_DIR) or "results"
    fmt = output.get("format", "csv")
    if fmt not in ("csv", "json", "both"):
        raise ConfigError("output.format", "must be 'csv', 'json' or 'both'")
    workers = _num(doc.get("workers", 1), "workers", lo=1, integer=True)
    return ExperimentConfig(experiment, params, seed, entropy and doc.get("seed") is None,
                            Path(out_dir), fmt, workers, source=copy.deepcopy(doc))


def parse_config(file: str | None = None, overrides: dict | None = None, env: dict | None = None) -> ExperimentConfig:
    """Merge a config file (if any) with flag overrides and validate.

    The output directory is resolved flag > environment > file, so an env value
    replaces the file's ``output.dir`` unless a flag sets it.
    """
    env = os.environ if env is None else env
    doc = load_document(file) if file else {}
    overrides = overrides or {}
    if env.get(ENV_OUTPUT_DIR) and not _has(overrides, "output.dir"):
        doc = deep_merge(doc, {"output": {"dir": env[ENV_OUTPUT_DIR]}})
    return validate(deep_merge(doc, overrides), env)
