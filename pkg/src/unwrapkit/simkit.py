"""Reproducible Monte-Carlo harness: observation synthesis, trial batches,
aggregated metrics, and the three sweep protocols (SNR, range budget K,
frequency count N via an SNR-threshold scan).

Determinism contract
--------------------
Each trial t derives its own substream seed from (master seed, t) through
splitmix64, a documented 64-bit avalanche mixer, then draws from an
independent numpy Generator. Trials are aggregated in fixed-size chunks
whose partial sums are merged in chunk order, so results are identical
bytes regardless of how many workers execute the chunks. The Gaussian
sampling contract is distributional (not bit-compatible across numpy
versions or other implementations).

Parallelism: trials are independent; if the environment variable
``UNWRAP_KIT_THREADS`` is set above 1, chunks are dispatched to a process
pool of that size. The chunk layout does not depend on the worker count.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .core import TWO_PI, FrequencyPlan, NoiseSpec, PhaseObservation, wrap_phase
from .errors import (
    ConfigError,
    InfeasibleDesignError,
    InvalidArgumentError,
    UndefinedBoundError,
)
from .estimators import lookup_estimator
from .freqdesign import design_concerto_plan
from .theory import crb

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15

#: Trials per aggregation chunk; fixed so that results never depend on the
#: worker count.
CHUNK_TRIALS = 2048

CSV_HEADER = (
    "sweep_param,method,n_trials,mse_m2,rmse_m,mse_db,"
    "p_fail_lambda0,p_fail_stderr,p_coarse_fail,crb_m2,mean_error_m"
)


def mix_seed(seed: int, index: int) -> int:
    """splitmix64 avalanche of (seed + index * golden gamma); 64-bit."""
    z = (seed + index * _GOLDEN64) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def synthesize_observation(
    l_m: float,
    plan: FrequencyPlan,
    noise: NoiseSpec,
    rng: np.random.Generator,
) -> PhaseObservation:
    """One noisy observation: wrap(2*pi*L/lambda_i + theta_i), theta iid Gaussian."""
    lam = np.array(plan.wavelengths_m)
    ideal = TWO_PI * l_m / lam
    if noise.sigma_rad > 0.0:
        ideal = ideal + noise.sigma_rad * rng.standard_normal(lam.size)
    return PhaseObservation(phases_rad=wrap_phase(ideal), plan=plan, truth_m=float(l_m))


@dataclass(frozen=True)
class TrialConfig:
    """One Monte-Carlo batch: plan, noise level, trial count, seed, truth policy.

    ``truth_policy`` is "uniform" (range drawn uniformly over
    +/- truth_halfwidth_m, default K/2) or "fixed" (every trial at
    ``truth_m``).
    """

    plan: FrequencyPlan
    noise: NoiseSpec
    trials: int
    seed: int
    methods: tuple = ("concerto",)
    truth_policy: str = "uniform"
    truth_m: float | None = None
    truth_halfwidth_m: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        methods = tuple(self.methods)
        if not methods:
            raise ConfigError("methods must be non-empty")
        object.__setattr__(self, "methods", methods)
        if self.truth_policy not in ("uniform", "fixed"):
            raise ConfigError(f"unknown truth_policy {self.truth_policy!r}")
        if self.truth_policy == "fixed" and self.truth_m is None:
            raise ConfigError("fixed truth policy needs truth_m")

    def resolved_halfwidth(self) -> float:
        if self.truth_policy == "fixed":
            return 0.0
        if self.truth_halfwidth_m is not None:
            return self.truth_halfwidth_m
        budget = self.plan.range_budget_m
        if budget is None:
            budget = self.plan.umr_m
        if not math.isfinite(budget):
            raise ConfigError("uniform truth policy needs a finite range budget")
        return budget / 2.0


@dataclass
class SimRow:
    """Aggregated metrics for one (method, sweep point)."""

    sweep_param: float
    method: str
    n_trials: int
    mse_m2: float = math.nan
    rmse_m: float = math.nan
    p_fail_lambda0: float = math.nan
    p_fail_stderr: float = math.nan
    p_coarse_fail: float = math.nan
    p_coarse_fail_stderr: float = math.nan
    crb_m2: float = math.nan
    mean_error_m: float = math.nan
    mse_stderr_m2: float = math.nan
    error: str | None = None

    @property
    def mse_db(self) -> float:
        if self.mse_m2 > 0.0:
            return 10.0 * math.log10(self.mse_m2)
        return -math.inf if self.mse_m2 == 0.0 else math.nan


@dataclass
class SimReport:
    """Ordered collection of sweep rows plus the CSV emitter."""

    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.sweep_param!r},{r.method},{r.n_trials},{r.mse_m2!r},"
                f"{r.rmse_m!r},{r.mse_db!r},{r.p_fail_lambda0!r},"
                f"{r.p_fail_stderr!r},{r.p_coarse_fail!r},{r.crb_m2!r},"
                f"{r.mean_error_m!r}"
            )
        return "\n".join(lines) + "\n"

    def by_method(self, method: str) -> list:
        return [r for r in self.rows if r.method == method]


def _worker_count() -> int:
    raw = os.environ.get("UNWRAP_KIT_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_chunk(cfg: TrialConfig, start: int, stop: int) -> dict:
    """Aggregate trials [start, stop) into per-method partial sums."""
    plan = cfg.plan
    fns = [(name, lookup_estimator(name)) for name in cfg.methods]
    lam0 = plan.wavelengths_m[0]
    coarse_limit = plan.c_m_s / (2.0 * plan.bandwidth_hz) if plan.n >= 2 else math.inf
    halfwidth = cfg.resolved_halfwidth()

    acc = {
        name: {"e": [], "e2": [], "e4": [], "fail": 0, "coarse_fail": 0}
        for name in cfg.methods
    }
    for t in range(start, stop):
        rng = np.random.default_rng(mix_seed(cfg.seed, t))
        if cfg.truth_policy == "uniform":
            l_true = rng.uniform(-halfwidth, halfwidth)
        else:
            l_true = cfg.truth_m
        obs = synthesize_observation(l_true, plan, cfg.noise, rng)
        for name, fn in fns:
            trace = fn(obs)
            e = trace.l_final_m - l_true
            a = acc[name]
            a["e"].append(e)
            a["e2"].append(e * e)
            a["e4"].append(e * e * e * e)
            if abs(e) > lam0:
                a["fail"] += 1
            if name == "concerto" and abs(l_true - trace.l_coarse_m) > coarse_limit:
                a["coarse_fail"] += 1
    return {
        name: {
            "sum_e": math.fsum(a["e"]),
            "sum_e2": math.fsum(a["e2"]),
            "sum_e4": math.fsum(a["e4"]),
            "fail": a["fail"],
            "coarse_fail": a["coarse_fail"],
        }
        for name, a in acc.items()
    }


def _chunk_bounds(trials: int):
    return [(lo, min(lo + CHUNK_TRIALS, trials)) for lo in range(0, trials, CHUNK_TRIALS)]


def run_trials(cfg: TrialConfig, sweep_param: float | None = None) -> SimReport:
    """Run one Monte-Carlo batch and aggregate the metrics per method.

    Unknown method names fail before any trial runs. The report carries one
    row per method, tagged with ``sweep_param`` (defaults to the batch's
    SNR in dB).
    """
    for name in cfg.methods:
        lookup_estimator(name)
    if sweep_param is None:
        sweep_param = cfg.noise.snr_db

    bounds = _chunk_bounds(cfg.trials)
    workers = _worker_count()
    if workers > 1 and len(bounds) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(_run_chunk, *zip(*[(cfg, lo, hi) for lo, hi in bounds])))
    else:
        partials = [_run_chunk(cfg, lo, hi) for lo, hi in bounds]

    try:
        crb_m2 = crb(cfg.plan, cfg.noise)
    except UndefinedBoundError:
        crb_m2 = math.nan

    n = cfg.trials
    report = SimReport()
    for name in cfg.methods:
        sum_e = math.fsum(p[name]["sum_e"] for p in partials)
        sum_e2 = math.fsum(p[name]["sum_e2"] for p in partials)
        sum_e4 = math.fsum(p[name]["sum_e4"] for p in partials)
        fail = sum(p[name]["fail"] for p in partials)
        coarse_fail = sum(p[name]["coarse_fail"] for p in partials)

        mse = sum_e2 / n
        m4 = sum_e4 / n
        p_fail = fail / n
        row = SimRow(
            sweep_param=float(sweep_param),
            method=name,
            n_trials=n,
            mse_m2=mse,
            rmse_m=math.sqrt(mse),
            p_fail_lambda0=p_fail,
            p_fail_stderr=math.sqrt(max(p_fail * (1.0 - p_fail), 0.0) / n),
            crb_m2=crb_m2,
            mean_error_m=sum_e / n,
            mse_stderr_m2=math.sqrt(max(m4 - mse * mse, 0.0) / n),
        )
        if name == "concerto":
            p_cf = coarse_fail / n
            row.p_coarse_fail = p_cf
            row.p_coarse_fail_stderr = math.sqrt(max(p_cf * (1.0 - p_cf), 0.0) / n)
        report.rows.append(row)
    return report


def sweep_snr(cfg: TrialConfig, snr_db_list) -> SimReport:
    """Run the batch at each SNR point; one row per (method, snr_db).

    All points share the master seed, so they see common random numbers;
    comparisons across SNR are paired.
    """
    report = SimReport()
    for snr_db in snr_db_list:
        point = replace(cfg, noise=NoiseSpec.from_snr_db(snr_db))
        report.rows.extend(run_trials(point, sweep_param=snr_db).rows)
    return report


#: Sweep protocols keep the sampled truth this fraction of K away from the
#: origin (halfwidth = fraction * K), inside the unambiguous boundary.
SWEEP_TRUTH_FRACTION = 0.25


def sweep_range(
    f_high_hz: float,
    f_low_hz: float,
    n: int,
    k_list_m,
    snr_db: float,
    trials: int,
    seed: int,
    c_m_s: float,
    truth_fraction: float = SWEEP_TRUTH_FRACTION,
) -> SimReport:
    """Coarse-stage validity versus range budget K.

    Designs a fresh plan per K and reports the coarse-failure probability
    of the three-stage estimator. An infeasible K produces a row with the
    error recorded and no trials; the sweep continues.
    """
    report = SimReport()
    noise = NoiseSpec.from_snr_db(snr_db)
    for k in k_list_m:
        try:
            plan = design_concerto_plan(f_high_hz, f_low_hz, n, k, c_m_s)
        except (InfeasibleDesignError, InvalidArgumentError) as exc:
            report.rows.append(
                SimRow(sweep_param=float(k), method="concerto", n_trials=0, error=str(exc))
            )
            continue
        cfg = TrialConfig(
            plan=plan,
            noise=noise,
            trials=trials,
            seed=seed,
            methods=("concerto",),
            truth_policy="uniform",
            truth_halfwidth_m=truth_fraction * k,
        )
        report.rows.extend(run_trials(cfg, sweep_param=k).rows)
    return report


@dataclass
class ThresholdResult:
    """Smallest grid SNR meeting the reliability target, or None if none does."""

    threshold_db: float | None
    rows: list


def snr_threshold(
    f_high_hz: float,
    f_low_hz: float,
    n: int,
    k_m: float,
    snr_db_grid,
    trials: int,
    seed: int,
    p_threshold: float = 1e-3,
    c_m_s: float = 299_792_458.0,
    truth_fraction: float = SWEEP_TRUTH_FRACTION,
    stop_at_first: bool = True,
) -> ThresholdResult:
    """Scan an ascending SNR grid for the reliability threshold.

    The threshold is the smallest grid SNR at which the three-stage
    estimator's P(|error| > lambda_0) is at or below ``p_threshold``. With
    ``stop_at_first`` the scan ends at the first passing point; the
    evaluated rows are returned either way.
    """
    grid = [float(s) for s in snr_db_grid]
    if not grid:
        raise InvalidArgumentError("SNR grid must be non-empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidArgumentError("SNR grid must be strictly ascending")
    if not (0.0 < p_threshold < 1.0):
        raise InvalidArgumentError("p_threshold must lie in (0, 1)")
    plan = design_concerto_plan(f_high_hz, f_low_hz, n, k_m, c_m_s)
    rows = []
    threshold = None
    for snr_db in grid:
        cfg = TrialConfig(
            plan=plan,
            noise=NoiseSpec.from_snr_db(snr_db),
            trials=trials,
            seed=seed,
            methods=("concerto",),
            truth_policy="uniform",
            truth_halfwidth_m=truth_fraction * k_m,
        )
        row = run_trials(cfg, sweep_param=snr_db).rows[0]
        rows.append(row)
        if row.p_fail_lambda0 <= p_threshold:
            threshold = snr_db
            if stop_at_first:
                break
    return ThresholdResult(threshold_db=threshold, rows=rows)
