"""Scaling-experiment harness: samples maps over an (theta, n) grid,
records the metric quantities per trial, aggregates per grid point, and
fits the log-scaling of the means.

Determinism contract: every trial derives its generator from
(master_seed, grid_index, trial_index), so results are identical for any
worker count; rows are sorted by (n, trial) before aggregation.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .quotient import (CONDITION_A_DEFAULTS, DIAMETER_EXACT_CAP, check_condition_A,
                       injectivity_radius, metric_report)
from .sample import sample_odd_composition, sample_unicellular_graph

__all__ = [
    "ExperimentConfig",
    "TrialRow",
    "run_scaling_experiment",
    "aggregate",
    "fit_log_scaling",
    "fit_condition_a_constants",
    "ScalingFit",
    "trial_rng",
    "EulerViolation",
]


class EulerViolation(RuntimeError):
    """A sampled map failed v - n = 1 - 2g; carries the offending trial."""

    def __init__(self, n, trial, seed):
        super().__init__(f"Euler identity violated at n={n}, trial={trial}, seed={seed}")
        self.n = n
        self.trial = trial
        self.seed = seed


@dataclass
class ExperimentConfig:
    theta: float
    n_grid: list
    trials: int
    master_seed: int = 0
    metrics: tuple = ("typical", "diameter", "injectivity")
    diameter_exact_cap: int = DIAMETER_EXACT_CAP
    condition_a_constants: Optional[dict] = None
    genus_zero: bool = False       # negative control: force g = 0
    threads: int = 1

    def __post_init__(self):
        if not self.genus_zero and not 0 < self.theta < 0.5:
            raise ValueError("theta must lie in (0, 1/2)")
        if self.trials < 1 or not self.n_grid:
            raise ValueError("need at least one grid entry and one trial")

    def genus_of(self, n: int) -> int:
        if self.genus_zero:
            return 0
        g = round(self.theta * n)
        # N = n + 1 - 2g always matches the parity of n + 1; only the range
        # needs checking here
        if not 0 <= 2 * g <= n:
            raise ValueError(f"infeasible grid entry n={n} at theta={self.theta}")
        return g

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        return cls(**raw)


@dataclass(frozen=True)
class TrialRow:
    n: int
    trial: int
    v: int
    g: int
    typical_distance: int
    diameter: int
    diameter_exact: bool
    injectivity_radius: float      # inf = circuit-free, -1 = loop at the root
    cond_a: tuple
    lambda_max: int
    attempts: int


def trial_rng(master_seed: int, grid_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(grid_index, trial)))


def _inj_to_float(val) -> float:
    if val is None:
        return -1.0
    return float(val)


def fit_condition_a_constants(n: int, theta: float, rng: np.random.Generator,
                              samples: int = 150, margin: float = 1.6) -> dict:
    """Envelope fit of the condition-(A) constants from composition samples:
    the observed ranges widened by ``margin`` (upper) and 1/margin (lower).
    Non-normative; the analytic statement only asserts such constants exist.
    """
    g = round(theta * n)
    N = n + 1 - 2 * g
    logn = math.log(n)
    lmax, s2, s3, ones = [], [], [], []
    for _ in range(samples):
        lam, _ = sample_odd_composition(n, N, rng)
        p = np.asarray(lam.parts, dtype=float)
        lmax.append(p.max())
        s2.append((p ** 2).sum() / n)
        s3.append((p ** 3).sum() / n)
        ones.append((p == 1).sum() / n)
    return {"C0": max(lmax) / logn * margin,
            "C1": min(s2) / margin,
            "C2": max(s3) * margin,
            "d1": min(ones) / margin,
            "d2": max(ones) * margin}


def _condition_a_constants(cfg: "ExperimentConfig") -> dict:
    if cfg.condition_a_constants:
        return cfg.condition_a_constants
    if cfg.genus_zero:
        return next(iter(CONDITION_A_DEFAULTS.values()))
    known = CONDITION_A_DEFAULTS.get(round(cfg.theta, 6))
    if known:
        return known
    rng = np.random.default_rng(
        np.random.SeedSequence(cfg.master_seed, spawn_key=(0xA,)))
    return fit_condition_a_constants(min(max(cfg.n_grid), 20000), cfg.theta, rng)


def _run_trial(args):
    cfg, grid_index, n, trial = args
    rng = trial_rng(cfg.master_seed, grid_index, trial)
    g = cfg.genus_of(n)
    gq, info = sample_unicellular_graph(n, g, rng)
    if gq.v - gq.n != 1 - 2 * g:
        raise EulerViolation(n, trial, cfg.master_seed)
    report = metric_report(gq, rng, exact_cap=cfg.diameter_exact_cap)
    constants = cfg.condition_a_constants
    cond = check_condition_A(info["lambda"], n, constants) if n >= 2 else (True,) * 3
    return TrialRow(
        n=n, trial=trial, v=gq.v, g=g,
        typical_distance=report.typical_distance,
        diameter=report.diameter,
        diameter_exact=report.diameter_exact,
        injectivity_radius=_inj_to_float(report.injectivity_radius),
        cond_a=cond,
        lambda_max=max(info["lambda"].parts),
        attempts=info["attempts"],
    )


def run_scaling_experiment(cfg: ExperimentConfig) -> list:
    """All trial rows, sorted by (n, trial)."""
    cfg.condition_a_constants = _condition_a_constants(cfg)
    jobs = [(cfg, gi, n, t)
            for gi, n in enumerate(cfg.n_grid) for t in range(cfg.trials)]
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(_run_trial, jobs, chunksize=8))
    else:
        rows = [_run_trial(j) for j in jobs]
    rows.sort(key=lambda r: (r.n, r.trial))
    return rows


def aggregate(rows: list) -> list:
    """Per-n summary dicts: means, medians, quantiles and ratios to log n."""
    out = []
    for n in sorted({r.n for r in rows}):
        sub = [r for r in rows if r.n == n]
        typ = np.array([r.typical_distance for r in sub], dtype=float)
        dia = np.array([r.diameter for r in sub], dtype=float)
        inj = np.array([r.injectivity_radius for r in sub])
        logn = math.log(n)
        out.append({
            "n": n,
            "trials": len(sub),
            "g": sub[0].g,
            "mean_typical": typ.mean(),
            "median_typical": float(np.median(typ)),
            "q90_typical": float(np.quantile(typ, 0.9)),
            "mean_diameter": dia.mean(),
            "median_diameter": float(np.median(dia)),
            "diameter_exact": all(r.diameter_exact for r in sub),
            "typical_over_logn": typ.mean() / logn,
            "diameter_over_logn": dia.mean() / logn,
            "inj_pass_rate": float(np.mean(inj >= 0.05 * logn)),
            "cond_a_rate": float(np.mean([all(r.cond_a) for r in sub])),
            "mean_attempts": float(np.mean([r.attempts for r in sub])),
            "lambda_max": int(max(r.lambda_max for r in sub)),
        })
    return out


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    rel_residual: float          # RMS residual over RMS of the data
    ratios: tuple                # mean metric / log n per grid point
    successive_spread: float     # max |ratio_{i+1}/ratio_i - 1| over the tail
    stable: bool                 # spread below the threshold
    linear: bool                 # residual test passed


def fit_log_scaling(ns, means, tail: int = 3, spread_threshold: float = 0.15,
                    residual_threshold: float = 0.05) -> ScalingFit:
    """Least-squares fit of the mean metric against log n, with the
    successive-ratio stability check over the last ``tail`` grid points."""
    ns = list(ns)
    means = [float(m) for m in means]
    if len(ns) < 3:
        raise ValueError("need at least 3 grid points")
    x = np.log(np.array(ns, dtype=float))
    y = np.array(means, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rel = float(np.sqrt((resid ** 2).mean()) / max(np.sqrt((y ** 2).mean()), 1e-12))
    ratios = y / x
    tail_ratios = ratios[-tail:]
    succ = np.abs(tail_ratios[1:] / tail_ratios[:-1] - 1)
    spread = float(succ.max()) if len(succ) else 0.0
    return ScalingFit(slope=float(slope), intercept=float(intercept),
                      rel_residual=rel, ratios=tuple(float(r) for r in ratios),
                      successive_spread=spread,
                      stable=spread < spread_threshold,
                      linear=rel < residual_threshold)


def rows_to_csv(rows: list) -> str:
    header = ("n,trial,v,g,typical_distance,diameter,diameter_exact,"
              "injectivity_radius,cond_a_i,cond_a_ii,cond_a_iii,lambda_max,attempts")
    lines = [header]
    for r in rows:
        inj = "undef" if r.injectivity_radius < 0 else (
            "inf" if math.isinf(r.injectivity_radius) else str(int(r.injectivity_radius)))
        lines.append(
            f"{r.n},{r.trial},{r.v},{r.g},{r.typical_distance},{r.diameter},"
            f"{int(r.diameter_exact)},{inj},{int(r.cond_a[0])},{int(r.cond_a[1])},"
            f"{int(r.cond_a[2])},{r.lambda_max},{r.attempts}")
    return "\n".join(lines) + "\n"


def summary_to_csv(summary: list) -> str:
    keys = list(summary[0].keys())
    lines = [",".join(keys)]
    for row in summary:
        lines.append(",".join(_fmt(row[k]) for k in keys))
    return "\n".join(lines) + "\n"


def _fmt(x):
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


GNUPLOT_TEMPLATE = """# gnuplot script for scaling summaries
set datafile separator ','
set key autotitle columnhead
set logscale x 2
set xlabel 'n'
set ylabel 'mean metric / log n'
plot '{csv}' using 1:10 with linespoints title 'typical/log n', \\
     '{csv}' using 1:11 with linespoints title 'diameter/log n'
"""


def gnuplot_script(csv_path: str) -> str:
    return GNUPLOT_TEMPLATE.format(csv=csv_path)
