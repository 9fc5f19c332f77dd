"""Monte-Carlo harness: MAE, interval coverage and interval length per scenario.

One ground-truth graph is generated per scenario and held fixed; each
replication draws fresh noisy replicates of it and runs the full pipeline.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bootstrap import DEFAULT_B, analyze
from .errors import NoisyNetError
from .generator import DEFAULT_MAX_ITERS, generate_constrained
from .graph import GraphTargets, NoiseModel, edge_density, sample_replicates
from .moments import MODES
from .patterns import two_star, triangle

COLUMNS = ("p", "beta", "delta", "N2s", "Ntri", "gamma",
           "mae_alpha", "mae_beta", "mae_delta", "mae_N2s", "mae_Ntri", "mae_gamma",
           "rf_delta", "len_delta", "rf_N2s", "len_N2s", "rf_Ntri", "len_Ntri", "rf_gamma", "len_gamma",
           "failures")

# (p, delta, N2*, Ntri) targets; each is run at beta = .05 and .20 with alpha = .05
TABLE_TARGETS = (
    (30, 0.1, 100, 15), (30, 0.2, 430, 40),
    (50, 0.1, 1260, 50), (50, 0.2, 2300, 140),
    (100, 0.1, 5000, 150), (100, 0.2, 22000, 1800),
    (200, 0.1, 40000, 1500), (200, 0.2, 155000, 10000),
)
TABLE_BETAS = (0.05, 0.20)

_N_REPLICATES = {"both_unknown": 3, "alpha_known": 2, "beta_known": 2, "both_known": 1}


@dataclass(frozen=True)
class SimulationConfig:
    p: int
    delta: float
    alpha: float
    beta: float
    two_star_target: int
    triangle_target: int
    replications: int = 500
    bootstrap_B: int = DEFAULT_B
    mode: str = "both_unknown"
    base_seed: int = 0
    ci_level: float = 0.95
    max_iters: int = DEFAULT_MAX_ITERS

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        NoiseModel(self.alpha, self.beta)
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.bootstrap_B == 1:
            raise ValueError("bootstrap_B must be 0 (skip) or at least 2")

    @property
    def targets(self) -> GraphTargets:
        return GraphTargets.from_density(self.p, self.delta, self.two_star_target, self.triangle_target)


def table_configs(rows=None, **overrides) -> list[SimulationConfig]:
    """The 16 scenarios of the reference grid, optionally a 1-based subset."""
    out = []
    for p, d, n2, n3 in TABLE_TARGETS:
        for b in TABLE_BETAS:
            out.append(SimulationConfig(p, d, 0.05, b, n2, n3, **overrides))
    if rows is not None:
        out = [out[r - 1] for r in rows]
    return out


@dataclass
class SimulationReport:
    config: SimulationConfig
    truth: dict[str, float]
    mae: dict[str, float]
    rf: dict[str, float]
    length: dict[str, float]
    failures: dict[str, int]
    n_ok: int
    wall_time: float = 0.0
    records: list[dict] = field(default_factory=list, repr=False)

    def row(self) -> dict:
        c = self.config
        r = {"p": c.p, "beta": c.beta, "delta": c.delta, "N2s": c.two_star_target,
             "Ntri": c.triangle_target, "gamma": self.truth["gamma"]}
        for q in ("alpha", "beta", "delta", "N2s", "Ntri", "gamma"):
            r[f"mae_{q}"] = self.mae[q]
        for q in ("delta", "N2s", "Ntri", "gamma"):
            r[f"rf_{q}"] = self.rf[q]
            r[f"len_{q}"] = self.length[q]
        r["failures"] = sum(self.failures.values())
        return r


def _replicate_seed(base_seed: int, i: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(1, i))


def _one_replication(a, cfg: SimulationConfig, i: int) -> dict:
    noise = NoiseModel(cfg.alpha, cfg.beta)
    seed = _replicate_seed(cfg.base_seed, i)
    reps = sample_replicates(a, noise, seed, _N_REPLICATES[cfg.mode])
    boot_seed = int(seed.generate_state(1)[0])
    res = analyze(reps, [two_star(), triangle()], cfg.mode, alpha=cfg.alpha, beta=cfg.beta,
                  B=cfg.bootstrap_B, rng_seed=boot_seed, level=cfg.ci_level)
    rates = res.rates
    n2, n3 = res.estimates[0].implied_count, res.estimates[1].implied_count
    rec = {
        "alpha": rates.alpha_hat, "beta": rates.beta_hat, "delta": rates.delta_hat,
        "N2s": n2, "Ntri": n3, "gamma": res.estimates[1].c_hat / res.estimates[0].c_hat,
        "ci_delta": rates.ci_delta,
    }
    if res.intervals is not None:
        cnt = res.intervals.counts
        rec["ci_N2s"] = (cnt[0].lower, cnt[0].upper)
        rec["ci_Ntri"] = (cnt[1].lower, cnt[1].upper)
        cl = res.intervals.clustering
        rec["ci_gamma"] = (cl.lower, cl.upper)
    return rec


def run_scenario(cfg: SimulationConfig) -> SimulationReport:
    """Run all replications of one scenario; failed replications are counted and skipped."""
    start = time.perf_counter()
    a = generate_constrained(cfg.targets, cfg.base_seed, cfg.max_iters)
    truth = {"alpha": cfg.alpha, "beta": cfg.beta, "delta": edge_density(a),
             "N2s": float(cfg.two_star_target), "Ntri": float(cfg.triangle_target),
             "gamma": cfg.targets.clustering}
    records, failures = [], {}
    for i in range(cfg.replications):
        try:
            records.append(_one_replication(a, cfg, i))
        except (NoisyNetError, ZeroDivisionError) as exc:
            name = type(exc).__name__
            failures[name] = failures.get(name, 0) + 1

    nan = float("nan")
    mae, rf, length = {}, {}, {}
    for q in ("alpha", "beta", "delta", "N2s", "Ntri", "gamma"):
        errs = [abs(r[q] - truth[q]) for r in records]
        mae[q] = float(np.mean(errs)) if errs else nan
    for q in ("delta", "N2s", "Ntri", "gamma"):
        cis = [r[f"ci_{q}"] for r in records if f"ci_{q}" in r]
        if cis:
            rf[q] = float(np.mean([lo <= truth[q] <= hi for lo, hi in cis]))
            length[q] = float(np.mean([hi - lo for lo, hi in cis]))
        else:
            rf[q] = length[q] = nan
    return SimulationReport(cfg, truth, mae, rf, length, failures, len(records),
                            time.perf_counter() - start, records)


def _grid_row(cfg: SimulationConfig) -> dict:
    try:
        return run_scenario(cfg).row()
    except NoisyNetError as exc:
        row = {c: float("nan") for c in COLUMNS}
        row.update(p=cfg.p, beta=cfg.beta, delta=cfg.delta, N2s=cfg.two_star_target,
                   Ntri=cfg.triangle_target, failures=cfg.replications, error=f"{type(exc).__name__}: {exc}")
        return row


def run_grid(configs: list[SimulationConfig], workers: int = 1) -> list[dict]:
    """One table row per scenario, in input order.

    A scenario that cannot run (e.g. its ground truth is unreachable) yields a
    row of NaNs with an ``error`` entry instead of aborting the grid.
    Scenarios are independent, so ``workers > 1`` runs them in separate processes.
    """
    if not configs:
        raise ValueError("need at least one scenario")
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_grid_row, configs))
    return [_grid_row(cfg) for cfg in configs]


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


def format_csv(rows: list[dict]) -> str:
    cols = list(COLUMNS) + sorted({k for r in rows for k in r if k not in COLUMNS})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, restval="", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def write_csv(rows: list[dict], path) -> None:
    Path(path).write_text(format_csv(rows))


def to_json(rows: list[dict]) -> str:
    clean = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()} for r in rows]
    return json.dumps(clean, indent=2)


def config_dict(cfg: SimulationConfig) -> dict:
    return asdict(cfg)
