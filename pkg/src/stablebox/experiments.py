"""Seeded verification experiments with tolerance-checked metrics.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentReport`. Randomness comes from child streams of
``RngStream(seed, name_key(experiment))`` keyed by (part, block) or
(part, replicate), so a report depends only on the config.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import stats

from . import __version__
from .cusum import batch_cusum, floor_nt, tie_break
from .lepage import DEFAULT_K, sample_environment, sample_eta_with_max, sample_stable_bridges
from .limit_law import r_conditional_covariance, sample_r_conditional, sample_r_unconditional, tail_variance_ratio
from .permutation import (
    epsilon_indicators,
    epsilon_moments,
    order_statistic_sum_exact,
    permuted_cusum_samples,
    permuted_partial_sum_exact,
)
from .rng import RngStream, name_key
from .stable import StableParams, TailParams, sample_domain_of_attraction, sample_stable, two_sided_pareto
from .stats import kolmogorov_cdf, ks_critical_value, ks_one_sample, ks_two_sample, quantile

EXPERIMENTS = (
    "finite_variance",
    "lepage_stability",
    "bridge_crossval",
    "permutation_randomness",
    "covariance_identity",
    "averaging_check",
)
# replicates generated per derived stream in vectorised experiments
BLOCK = 1000
# -zeta(1/2) / sqrt(2 pi): first-order gap between a Brownian maximum and its
# maximum over a grid of mesh 1/n, in units of n**-1/2
GRID_CORRECTION = 0.5825971579390106
KOLMOGOROV_95 = 1.358

_BASE = dict(
    alpha=1.2,
    p=0.7,
    n=1000,
    reps=5000,
    num_perms=2000,
    num_envs=200,
    draws_per_env=2000,
    k_truncation=DEFAULT_K,
    ts=(0.5,),
    x0=0.0,
    alt_x0=0.25,
    spread_ns=(200, 2000),
    joint_ts=(0.3, 0.7),
    stability_alphas=(0.5, 1.0, 1.5),
    averaging_reps=100_000,
    tail_index_override=None,
)

_EXPERIMENT_DEFAULTS = {
    "finite_variance": dict(n=1000, reps=5000, num_envs=50, num_perms=2000),
    "lepage_stability": dict(alpha=1.5, p=0.5, reps=100_000, k_truncation=1000),
    "bridge_crossval": dict(n=5000, reps=10_000),
    "permutation_randomness": dict(),
    "covariance_identity": dict(n=7, reps=100, ts=(Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))),
    "averaging_check": dict(n=1000, reps=100_000),
}

DEFAULT_TOLERANCES = {
    "finite_variance": {
        "ks_sup_zn": 0.03,
        "ks_sup_zn_perm": 0.03,
        "q95_sup_zn_deviation": 0.05,
        "spread_ratio": 0.5,
        "ks_sup_zn_grid_corrected": 0.03,
    },
    "lepage_stability": {
        "ks_stability": 0.02,
        "ks_max_exponential": 0.01,
        "ks_eta_vs_direct_iqr": 0.03,
    },
    "bridge_crossval": {
        "ks_bridge": 0.05,
        "ks_averaging": 0.02,
        "endpoint_abs_max": 0.0,
    },
    "permutation_randomness": {
        "spread_min": 0.03,
        "spread_ratio_max": 2.0,
        "ks_conditional": 0.15,
        "ks_joint": 0.15,
        "cov_z_abs": 3.0,
        "tail_variance_ratio_max": 1e-6,
    },
    "covariance_identity": {
        "moment_mismatches": 0.0,
        "rewrite_failures": 0.0,
        "tie_break_failures": 0.0,
    },
    "averaging_check": {
        "ks_averaging": 0.02,
        "endpoint_abs_max": 0.0,
    },
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _parse_t(v):
    if isinstance(v, str) and "/" in v:
        return Fraction(v)
    if isinstance(v, (int, Fraction)):
        return v
    return float(v)


def _t_to_json(t):
    return str(t) if isinstance(t, Fraction) else t


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment run.

    Fields not given explicitly take the experiment's defaults (see
    :func:`ExperimentConfig.from_dict`). ``tolerances`` overrides entries of
    :data:`DEFAULT_TOLERANCES` by metric name. Times may be given as
    ``"1/3"`` strings to be used exactly.
    """

    experiment: str
    seed: int
    alpha: float = _BASE["alpha"]
    p: float = _BASE["p"]
    n: int = _BASE["n"]
    reps: int = _BASE["reps"]
    num_perms: int = _BASE["num_perms"]
    num_envs: int = _BASE["num_envs"]
    draws_per_env: int = _BASE["draws_per_env"]
    k_truncation: int = _BASE["k_truncation"]
    ts: tuple = _BASE["ts"]
    x0: float = _BASE["x0"]
    alt_x0: Optional[float] = _BASE["alt_x0"]
    spread_ns: tuple = _BASE["spread_ns"]
    joint_ts: tuple = _BASE["joint_ts"]
    stability_alphas: tuple = _BASE["stability_alphas"]
    averaging_reps: int = _BASE["averaging_reps"]
    tail_index_override: Optional[float] = None
    tolerances: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a non-negative 64-bit integer")
        for name in ("n", "reps", "num_perms", "num_envs", "draws_per_env", "k_truncation", "averaging_reps"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'")
        if not 0.0 < self.alpha <= 2.0:
            raise ConfigError("alpha must lie in (0, 2]")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p must lie in [0, 1]")
        object.__setattr__(self, "ts", tuple(_parse_t(t) for t in self.ts))
        object.__setattr__(self, "joint_ts", tuple(_parse_t(t) for t in self.joint_ts))
        object.__setattr__(self, "spread_ns", tuple(int(v) for v in self.spread_ns))
        object.__setattr__(self, "stability_alphas", tuple(float(a) for a in self.stability_alphas))
        for t in self.ts + self.joint_ts:
            if not 0 <= t <= 1:
                raise ConfigError(f"times must lie in [0, 1], got {t}")
        if len(self.joint_ts) != 2:
            raise ConfigError("joint_ts needs exactly two times")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES[self.experiment])
        if unknown:
            raise ConfigError(f"unknown tolerance names for {self.experiment}: {sorted(unknown)}")
        object.__setattr__(self, "tolerances", {k: float(v) for k, v in self.tolerances.items()})

    @classmethod
    def field_names(cls) -> tuple:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Build a config, rejecting unknown keys and filling experiment defaults."""
        unknown = set(data) - set(cls.field_names())
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config must name an experiment")
        if "seed" not in data:
            raise ConfigError("config must set a seed")
        exp = data["experiment"]
        merged = dict(_EXPERIMENT_DEFAULTS.get(exp, {}))
        merged.update(data)
        try:
            return cls(**merged)
        except TypeError as err:
            raise ConfigError(str(err)) from err

    @classmethod
    def defaults(cls, experiment: str, seed: int, **overrides) -> "ExperimentConfig":
        return cls.from_dict(dict(experiment=experiment, seed=seed, **overrides))

    @classmethod
    def load(cls, path, seed: Optional[int] = None, overrides=()) -> "ExperimentConfig":
        """Read a JSON config; ``seed`` and ``key=value`` overrides take precedence."""
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        if seed is not None:
            data["seed"] = seed
        data.update(parse_overrides(overrides))
        return cls.from_dict(data)

    def tolerance(self, name: str) -> float:
        return self.tolerances.get(name, DEFAULT_TOLERANCES[self.experiment][name])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ts"] = [_t_to_json(t) for t in self.ts]
        d["joint_ts"] = [_t_to_json(t) for t in self.joint_ts]
        d["spread_ns"] = list(self.spread_ns)
        d["stability_alphas"] = list(self.stability_alphas)
        return d

    def stream(self, *key: int) -> RngStream:
        return RngStream(self.seed, name_key(self.experiment), tuple(key))


def parse_overrides(items) -> dict:
    """``["n=200", "ts=[0.25, 0.5]"]`` -> ``{"n": 200, "ts": [0.25, 0.5]}`` (values parsed as JSON when possible)."""
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in ExperimentConfig.field_names():
            raise ConfigError(f"unknown config key {key!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


@dataclass(frozen=True)
class Metric:
    """One reported quantity. ``op`` is how ``value`` is compared with ``tolerance``."""

    name: str
    value: float
    tolerance: Optional[float] = None
    op: str = "info"
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> Optional[bool]:
        if self.op == "info":
            return None
        if self.op == "lt":
            return bool(self.value < self.tolerance)
        if self.op == "le":
            return bool(self.value <= self.tolerance)
        if self.op == "gt":
            return bool(self.value > self.tolerance)
        raise ValueError(f"unknown comparison {self.op!r}")


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    metrics: list
    wall_time: float = 0.0
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(m.passed is not False for m in self.metrics)

    def metric(self, name: str) -> Metric:
        for m in self.metrics:
            if m.name == name:
                return m
        raise KeyError(name)

    def failures(self) -> list:
        return [m for m in self.metrics if m.passed is False]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value", "tolerance", "pass"])
        for m in self.metrics:
            tol = "" if m.tolerance is None else format(m.tolerance, ".17g")
            flag = "" if m.passed is None else str(m.passed).lower()
            w.writerow([m.name, format(m.value, ".17g"), tol, flag])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "version": self.version,
            "wall_time_s": self.wall_time,
            "passed": self.passed,
            "metrics": [
                {
                    "name": m.name,
                    "value": m.value,
                    "tolerance": m.tolerance,
                    "op": m.op,
                    "pass": m.passed,
                    "detail": m.detail,
                }
                for m in self.metrics
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def write(self, path=None) -> list:
        """Write the report; CSV output also gets a ``.json`` sidecar. Returns the paths written."""
        path = Path(path or self.config.output_path or f"{self.config.experiment}.{self.config.format}")
        path.parent.mkdir(parents=True, exist_ok=True)
        if self.config.format == "json":
            path.write_text(self.to_json() + "\n")
            return [path]
        path.write_text(self.to_csv())
        sidecar = path.with_suffix(path.suffix + ".json")
        sidecar.write_text(self.to_json() + "\n")
        return [path, sidecar]


def parse_csv(text: str) -> list:
    """Inverse of :meth:`ExperimentReport.to_csv`."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["metric", "value", "tolerance", "pass"]:
        raise ValueError("not a metrics CSV")
    out = []
    for name, value, tol, flag in rows[1:]:
        out.append(
            {
                "metric": name,
                "value": float(value),
                "tolerance": None if tol == "" else float(tol),
                "pass": None if flag == "" else flag == "true",
            }
        )
    return out


# metric helpers


def _ks2(name: str, a, b, tol: Optional[float]) -> Metric:
    a, b = np.asarray(a), np.asarray(b)
    d = ks_two_sample(a, b)
    detail = {"ks": d, "n": int(a.size), "m": int(b.size), "critical_5pct": ks_critical_value(a.size, b.size)}
    return Metric(name, d, tol, "info" if tol is None else "lt", detail)


def _ks1(name: str, a, cdf: Callable, tol: Optional[float]) -> Metric:
    a = np.asarray(a)
    d = ks_one_sample(a, cdf)
    detail = {"ks": d, "n": int(a.size), "critical_5pct": ks_critical_value(a.size)}
    return Metric(name, d, tol, "info" if tol is None else "lt", detail)


def _blocks(total: int):
    for b, start in enumerate(range(0, total, BLOCK)):
        yield b, min(BLOCK, total - start)


def _tail_params(cfg: ExperimentConfig, alpha: Optional[float] = None) -> TailParams:
    a = cfg.alpha if alpha is None else alpha
    p = 0.5 if a == 1.0 else cfg.p
    try:
        return TailParams(a, p)
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _single_t(cfg: ExperimentConfig):
    t = cfg.ts[0]
    if not 0 < t < 1:
        raise ConfigError("the first entry of ts must lie strictly inside (0, 1)")
    return t


def _timed(fn):
    def wrapper(cfg: ExperimentConfig) -> ExperimentReport:
        expected = fn.__name__[len("run_") :]
        if cfg.experiment != expected:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {expected!r}")
        start = time.perf_counter()
        metrics = fn(cfg)
        return ExperimentReport(cfg, metrics, wall_time=time.perf_counter() - start)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# experiments


def _finite_variance_data(cfg: ExperimentConfig, gen, rows: int, n: int) -> np.ndarray:
    if cfg.tail_index_override is None:
        return gen.standard_normal((rows, n))
    return two_sided_pareto(cfg.tail_index_override, cfg.p, rows * n, gen).reshape(rows, n)


@_timed
def run_finite_variance(cfg: ExperimentConfig) -> list:
    """Classical baseline: sup|Z_n| and sup|Z_n,pi| against the Kolmogorov law,
    and the spread of per-realization permutation CDFs at two sample sizes."""
    if cfg.tail_index_override is not None and cfg.tail_index_override <= 2.0:
        raise ConfigError("finite_variance needs a tail index above 2 (or none for normal data)")
    n = cfg.n
    sups, sups_perm = [], []
    for b, rows in _blocks(cfg.reps):
        gen = cfg.stream(0, b).generator()
        x = _finite_variance_data(cfg, gen, rows, n)
        sups.append(np.max(np.abs(batch_cusum(x, None, "sn")), axis=1))
        # a fresh sample for the permuted arm, each row permuted once
        y = _finite_variance_data(cfg, gen, rows, n)
        y = gen.permuted(y, axis=1)
        sups_perm.append(np.max(np.abs(batch_cusum(y, None, "sn")), axis=1))
    sups = np.concatenate(sups)
    sups_perm = np.concatenate(sups_perm)

    q95 = quantile(sups, 0.95)
    metrics = [
        _ks1("ks_sup_zn", sups, kolmogorov_cdf, cfg.tolerance("ks_sup_zn")),
        _ks1("ks_sup_zn_perm", sups_perm, kolmogorov_cdf, cfg.tolerance("ks_sup_zn_perm")),
        Metric("q95_sup_zn", q95),
        Metric("q95_sup_zn_deviation", abs(q95 - KOLMOGOROV_95), cfg.tolerance("q95_sup_zn_deviation"), "lt", {"q95": q95}),
        # grid maximum sits about GRID_CORRECTION / sqrt(n) below the continuous one
        _ks1(
            "ks_sup_zn_grid_corrected",
            sups + GRID_CORRECTION / math.sqrt(n),
            kolmogorov_cdf,
            cfg.tolerance("ks_sup_zn_grid_corrected"),
        ),
    ]

    t = _single_t(cfg)
    probes = [cfg.x0] + ([cfg.alt_x0] if cfg.alt_x0 is not None else [])
    spreads = {}
    for size in cfg.spread_ns:
        probs = np.empty((cfg.num_envs, len(probes)))
        for i in range(cfg.num_envs):
            x = _finite_variance_data(cfg, cfg.stream(1, size, i, 0).generator(), 1, size)[0]
            vals = permuted_cusum_samples(x, [t], cfg.num_perms, cfg.stream(1, size, i, 1), norming="sn")[:, 0]
            probs[i] = [np.mean(vals <= x0) for x0 in probes]
        sd = probs.std(axis=0, ddof=1)
        noise = np.sqrt(np.mean(probs * (1 - probs), axis=0) / cfg.num_perms)
        spreads[size] = sd
        metrics.append(Metric(f"spread_sd_n{size}", float(sd[0]), detail={"x0": cfg.x0, "t": _t_to_json(t)}))
        metrics.append(Metric(f"spread_noise_floor_n{size}", float(noise[0])))
        if len(probes) > 1:
            metrics.append(Metric(f"spread_sd_alt_n{size}", float(sd[1]), detail={"x0": cfg.alt_x0}))
    if len(cfg.spread_ns) >= 2:
        lo, hi = min(cfg.spread_ns), max(cfg.spread_ns)
        metrics.append(
            Metric(
                "spread_ratio",
                float(spreads[hi][0] / spreads[lo][0]),
                cfg.tolerance("spread_ratio"),
                "lt",
                {"n_small": lo, "n_large": hi},
            )
        )
        if len(probes) > 1:
            metrics.append(Metric("spread_ratio_alt", float(spreads[hi][1] / spreads[lo][1])))
    return metrics


@_timed
def run_lepage_stability(cfg: ExperimentConfig) -> list:
    """Strict stability of the series sum, the law of its largest jump, and
    agreement with the direct sampler after interquartile scaling."""
    k, count = cfg.k_truncation, cfg.reps
    metrics = []
    for i, a in enumerate(cfg.stability_alphas):
        if not 0.0 < a < 2.0:
            raise ConfigError("stability_alphas must lie in (0, 2)")
        tp = _tail_params(cfg, a)
        eta, _ = sample_eta_with_max(tp, k, cfg.stream(0, i), size=3 * count)
        pooled = (eta[:count] + eta[count : 2 * count]) / 2 ** (1.0 / a)
        metrics.append(_ks2(f"ks_stability_alpha{a:g}", pooled, eta[2 * count :], cfg.tolerance("ks_stability")))

    tp = _tail_params(cfg)
    if cfg.alpha >= 2.0:
        raise ConfigError("lepage_stability needs alpha < 2")
    _, z = sample_eta_with_max(tp, k, cfg.stream(1), size=count)
    metrics.append(_ks1("ks_max_exponential", z ** (-tp.alpha), stats.expon.cdf, cfg.tolerance("ks_max_exponential")))

    eta, _ = sample_eta_with_max(TailParams(1.5, 0.5), k, cfg.stream(2), size=count)
    direct = sample_stable(StableParams(1.5), count, cfg.stream(3))
    metrics.append(
        _ks2(
            "ks_eta_vs_direct_iqr",
            eta / stats.iqr(eta),
            direct / stats.iqr(direct),
            cfg.tolerance("ks_eta_vs_direct_iqr"),
        )
    )
    return metrics


def _averaging_metrics(cfg: ExperimentConfig, tp: TailParams, ts, reps: int, part: int) -> list:
    """Unconditional permuted CUSUM against the plain CUSUM, each from its own data."""
    n = cfg.n
    plain, perm = [], []
    for b, rows in _blocks(reps):
        g0 = cfg.stream(part, 0, b).generator()
        g1 = cfg.stream(part, 1, b).generator()
        x = sample_domain_of_attraction(tp, rows * n, g0).reshape(rows, n)
        plain.append(batch_cusum(x, ts, "tn"))
        y = sample_domain_of_attraction(tp, rows * n, g1).reshape(rows, n)
        perm.append(batch_cusum(g1.permuted(y, axis=1), ts, "tn"))
    plain = np.concatenate(plain)
    perm = np.concatenate(perm)
    metrics = []
    endpoint = 0.0
    for j, t in enumerate(ts):
        if floor_nt(n, t) in (0, n):
            endpoint = max(endpoint, float(np.max(np.abs(plain[:, j]))), float(np.max(np.abs(perm[:, j]))))
            continue
        metrics.append(_ks2(f"ks_averaging_t{float(t):g}", perm[:, j], plain[:, j], cfg.tolerance("ks_averaging")))
    metrics.append(Metric("endpoint_abs_max", endpoint, cfg.tolerance("endpoint_abs_max"), "le"))
    return metrics


@_timed
def run_bridge_crossval(cfg: ExperimentConfig) -> list:
    """Self-normalised CUSUM at large n against the stable bridge over its largest jump."""
    tp = _tail_params(cfg)
    inner = sorted({float(t) for t in cfg.ts if 0 < t < 1})
    grid = [0.0] + inner + [1.0]
    n = cfg.n
    data, limit = [], []
    for b, rows in _blocks(cfg.reps):
        x = sample_domain_of_attraction(tp, rows * n, cfg.stream(0, b)).reshape(rows, n)
        data.append(batch_cusum(x, grid, "tn"))
        _, bv, z = sample_stable_bridges(tp, grid, rows, cfg.stream(1, b), k=cfg.k_truncation)
        limit.append(bv / z[:, None])
    data = np.concatenate(data)
    limit = np.concatenate(limit)
    metrics = []
    for j, t in enumerate(grid):
        if 0 < t < 1:
            metrics.append(_ks2(f"ks_bridge_t{t:g}", data[:, j], limit[:, j], cfg.tolerance("ks_bridge")))
    metrics += _averaging_metrics(cfg, tp, [*inner, 1.0], cfg.averaging_reps, part=2)
    metrics.append(
        Metric(
            "bridge_endpoint_abs_max",
            float(max(np.max(np.abs(limit[:, -1])), np.max(np.abs(data[:, -1])))),
            cfg.tolerance("endpoint_abs_max"),
            "le",
        )
    )
    return metrics


@_timed
def run_averaging_check(cfg: ExperimentConfig) -> list:
    """Averaged over the data, the permuted CUSUM has exactly the law of the plain CUSUM."""
    tp = _tail_params(cfg)
    ts = list(cfg.ts)
    if not any(floor_nt(cfg.n, t) == cfg.n for t in ts):
        ts.append(1)
    return _averaging_metrics(cfg, tp, ts, cfg.reps, part=0)


def _conditional_probs(vals: np.ndarray, x0: float, joint_cols=None) -> np.ndarray:
    """``P{V <= x0}`` per row of the last axis group, optionally jointly over two columns."""
    if joint_cols is None:
        return np.mean(vals <= x0, axis=-1)
    a, b = joint_cols
    return np.mean((vals[..., a] <= x0) & (vals[..., b] <= x0), axis=-1)


@_timed
def run_permutation_randomness(cfg: ExperimentConfig) -> list:
    """Per-realization permutation CDFs against per-environment CDFs of the random limit."""
    tp = _tail_params(cfg)
    if tp.alpha >= 2.0:
        raise ConfigError("permutation_randomness needs alpha < 2")
    t = _single_t(cfg)
    t1, t2 = cfg.joint_ts
    ts = [t, t1, t2]
    probes = [("", cfg.x0)] + ([("_alt", cfg.alt_x0)] if cfg.alt_x0 is not None else [])

    # random limit: one conditional law per environment
    lim = sample_r_unconditional(tp, [float(s) for s in ts], cfg.k_truncation, cfg.num_envs, cfg.draws_per_env, cfg.stream(0))
    lim_probs = {tag: lim.conditional_cdf(x0, 0) for tag, x0 in probes}
    lim_joint = _conditional_probs(lim.values, cfg.x0, (1, 2))

    metrics = []
    spreads = {tag: {} for tag, _ in probes}
    data_probs = {}
    for size in cfg.spread_ns:
        probs = {tag: np.empty(cfg.num_envs) for tag, _ in probes}
        joint = np.empty(cfg.num_envs)
        for i in range(cfg.num_envs):
            x = sample_domain_of_attraction(tp, size, cfg.stream(1, size, i, 0))
            vals = permuted_cusum_samples(x, ts, cfg.num_perms, cfg.stream(1, size, i, 1))
            for tag, x0 in probes:
                probs[tag][i] = np.mean(vals[:, 0] <= x0)
            joint[i] = _conditional_probs(vals, cfg.x0, (1, 2))
        data_probs[size] = (probs, joint)
        for tag, x0 in probes:
            sd = float(np.std(probs[tag], ddof=1))
            spreads[tag][size] = sd
            metrics.append(Metric(f"spread_sd{tag}_n{size}", sd, cfg.tolerance("spread_min"), "gt", {"x0": x0}))

    largest = max(cfg.spread_ns)
    for tag, x0 in probes:
        vals = list(spreads[tag].values())
        ratio = max(vals) / min(vals)
        metrics.append(Metric(f"spread_ratio{tag}", ratio, cfg.tolerance("spread_ratio_max"), "lt", {"x0": x0}))
        metrics.append(Metric(f"spread_sd{tag}_limit", float(np.std(lim_probs[tag], ddof=1)), detail={"x0": x0}))
        for size in cfg.spread_ns:
            tol = cfg.tolerance("ks_conditional") if size == largest else None
            metrics.append(_ks2(f"ks_conditional{tag}_n{size}", data_probs[size][0][tag], lim_probs[tag], tol))
    for size in cfg.spread_ns:
        tol = cfg.tolerance("ks_joint") if size == largest else None
        metrics.append(_ks2(f"ks_joint_n{size}", data_probs[size][1], lim_joint, tol))

    # joint second moment under one fixed environment
    env = sample_environment(cfg.k_truncation, cfg.stream(2, 0))
    draw = sample_r_conditional(env, tp, [float(t1), float(t2)], cfg.k_truncation, cfg.reps * 4, cfg.stream(2, 1))
    a, b = draw.values[:, 0], draw.values[:, 1]
    prod = (a - a.mean()) * (b - b.mean())
    analytic = r_conditional_covariance(env, tp, float(t1), float(t2), cfg.k_truncation)
    se = float(prod.std(ddof=1) / math.sqrt(prod.size))
    z = abs(float(prod.mean()) - analytic) / se
    metrics.append(Metric("cov_z_abs", z, cfg.tolerance("cov_z_abs"), "lt", {"mc": float(prod.mean()), "analytic": analytic, "se": se}))

    ratios = [tail_variance_ratio(e, tp, cfg.k_truncation) for e in lim.envs] + [tail_variance_ratio(env, tp, cfg.k_truncation)]
    metrics.append(
        Metric(
            "tail_variance_ratio_max",
            float(max(ratios)),
            cfg.tolerance("tail_variance_ratio_max"),
            "lt",
            {"median": float(np.median(ratios)), "k": cfg.k_truncation},
        )
    )
    return metrics


def _enumerated_moments(n: int, t) -> tuple:
    """Variance and covariance sets of the centred indicators over all ``n!`` permutations, exactly."""
    x = np.arange(n, dtype=float)
    m = floor_nt(n, t)
    co = np.zeros((n, n), dtype=np.int64)
    ones = np.zeros(n, dtype=np.int64)
    count = 0
    for perm in itertools.permutations(range(n)):
        eps = epsilon_indicators(x, np.array(perm), t).eps
        co += np.outer(eps, eps)
        ones += eps
        count += 1
    mean = Fraction(m, n)
    means = {Fraction(int(v), count) for v in ones}
    second = [[Fraction(int(co[j, k]), count) - mean * mean for k in range(n)] for j in range(n)]
    var = {second[j][j] for j in range(n)}
    cov = {second[j][k] for j in range(n) for k in range(n) if j != k}
    return means, var, cov


@_timed
def run_covariance_identity(cfg: ExperimentConfig) -> list:
    """Exact indicator moments by enumeration, the order-statistic rewriting, and tie breaking."""
    if cfg.n > 7:
        raise ConfigError("covariance_identity enumerates n! permutations and is limited to n <= 7")
    if cfg.n < 2:
        raise ConfigError("covariance_identity needs n >= 2")
    ts = list(cfg.ts) + [0, 1]
    mismatches, checked = 0, 0
    for size in range(2, cfg.n + 1):
        for t in ts:
            means, var, cov = _enumerated_moments(size, t)
            exp_var, exp_cov = epsilon_moments(size, t)
            m = floor_nt(size, t)
            ok = means == {Fraction(m, size)} and var == {exp_var} and (cov == {exp_cov} or size < 2)
            mismatches += 0 if ok else 1
            checked += 1

    gen = cfg.stream(0).generator()
    n = cfg.n
    failures = 0
    for _ in range(cfg.reps):
        x = sample_domain_of_attraction(_tail_params(cfg), n, gen)
        x = tie_break(x, cfg.alpha).x
        perm = gen.permutation(n)
        for j in range(n + 1):
            t = Fraction(j, n)
            ind = epsilon_indicators(x, perm, t)
            if permuted_partial_sum_exact(x, perm, ind.m) != order_statistic_sum_exact(x, ind.eps, ind.m):
                failures += 1

    tie_fail = 0
    for _ in range(cfg.reps):
        x = gen.integers(0, 3, size=n).astype(float)
        once = tie_break(x, cfg.alpha)
        if np.unique(once.x).size != n or tie_break(once, cfg.alpha).x.tobytes() != once.x.tobytes():
            tie_fail += 1
    return [
        Metric("moment_mismatches", float(mismatches), cfg.tolerance("moment_mismatches"), "le", {"cases": checked}),
        Metric("rewrite_failures", float(failures), cfg.tolerance("rewrite_failures"), "le", {"cases": cfg.reps * (n + 1)}),
        Metric("tie_break_failures", float(tie_fail), cfg.tolerance("tie_break_failures"), "le", {"cases": cfg.reps}),
    ]


RUNNERS = {
    "finite_variance": run_finite_variance,
    "lepage_stability": run_lepage_stability,
    "bridge_crossval": run_bridge_crossval,
    "permutation_randomness": run_permutation_randomness,
    "covariance_identity": run_covariance_identity,
    "averaging_check": run_averaging_check,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    return RUNNERS[cfg.experiment](cfg)
