"""Ensemble experiments comparing simulated trajectories with limit laws.

Sample ``i`` of an ensemble always draws from ``RngStream(seed, i)`` and
samples are reduced in fixed-size chunks taken in index order, so reports
are bit-identical for any worker count.
"""
from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cycletype import sample_ewens_cycle_type, sample_uniform_cycle_type
from .divproc import (
    Weight,
    divisor_size_counts,
    divisor_size_distribution,
    lattice_index,
)
from .oracles import limit_joint_moment, mean_curve_limit
from .rng import DEFAULT_SEED, RngStream

CHUNK = 256
WORK_CAP = 10**10  # n * samples
ATOM_DENOMINATOR = 2**12


class ResourceError(ValueError):
    """Ensemble size exceeds the configured work cap."""


@dataclass(frozen=True)
class EnsembleConfig:
    n: int
    samples: int
    theta: float = 1.0
    seed: int = DEFAULT_SEED
    grid: int = 200
    ewens: float | None = None  # None means the uniform measure
    moments: tuple[tuple[float, ...], ...] = ()
    windows: tuple[float, ...] = ()
    increment: tuple[float, float] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.grid < 1:
            raise ValueError("grid resolution must be >= 1 (grid has resolution + 1 points)")
        Weight(self.theta)
        if self.ewens is not None and not self.ewens > 0:
            raise ValueError("ewens parameter must be positive")
        for tv in self.moments:
            if not tv or any(not 0 <= t <= 1 for t in tv):
                raise ValueError(f"moment times must lie in [0, 1], got {tv}")
        for a in self.windows:
            if not a > 0:
                raise ValueError(f"window sizes must be positive, got {a}")
        if self.increment is not None:
            s, t = self.increment
            if not 0 <= s <= t <= 1:
                raise ValueError(f"increment needs 0 <= s <= t <= 1, got {self.increment}")

    @property
    def uniform(self) -> bool:
        return self.ewens is None

    def time_grid(self) -> np.ndarray:
        return np.arange(self.grid + 1) / self.grid


@dataclass
class EnsembleReport:
    config: EnsembleConfig
    grid: np.ndarray
    mean_curve: np.ndarray
    mean_curve_se: np.ndarray
    moment_estimates: list[tuple[int, tuple[float, ...], float, float]]
    modulus_table: list[tuple[float, float]]
    increment_histogram: dict[float, float]
    oracle_distances: dict[str, float] = field(default_factory=dict)
    mean_cycles: float = 0.0
    increments_checked: int = 0
    increments_dyadic: int = 0


def _modulus(jumps_csum: np.ndarray, n: int, a: float) -> float:
    # closed window of length a over the jumps at k >= 1; a >= 1 takes them all
    if a >= 1:
        return float(jumps_csum[-1])
    width = min(int(math.floor(a * n + 1e-9)) + 1, n)
    return float((jumps_csum[width:] - jumps_csum[:-width]).max())


def _run_chunk(args):
    cfg, start, stop = args
    n = cfg.n
    grid_idx = lattice_index(cfg.time_grid(), n)
    moment_idx = [lattice_index(np.asarray(tv), n) for tv in cfg.moments]
    if cfg.increment is not None:
        inc_idx = lattice_index(np.asarray(cfg.increment), n)
    weight = Weight(cfg.theta)
    check_dyadic = cfg.increment is not None and cfg.theta == 1.0

    size = stop - start
    curves = np.empty((size, grid_idx.size))
    prods = np.empty((size, len(moment_idx)))
    mods = np.empty((size, len(cfg.windows)))
    incs = np.empty(size)
    ws = np.empty(size)
    dyadic = 0
    for row, i in enumerate(range(start, stop)):
        gen = RngStream(cfg.seed, i).generator()
        if cfg.uniform:
            ct = sample_uniform_cycle_type(n, gen)
        else:
            ct = sample_ewens_cycle_type(n, cfg.ewens, gen)
        d = divisor_size_distribution(ct, weight)
        cdf = d.cdf()
        curves[row] = cdf[grid_idx]
        for col, idx in enumerate(moment_idx):
            prods[row, col] = np.prod(cdf[idx])
        if cfg.windows:
            jumps_csum = np.concatenate(([0.0], np.cumsum(d.c[1:])))
            for col, a in enumerate(cfg.windows):
                mods[row, col] = _modulus(jumps_csum, n, a)
        ws[row] = ct.w
        if cfg.increment is not None:
            lo, hi = inc_idx
            incs[row] = cdf[hi] - cdf[lo]
            if check_dyadic:
                counts = divisor_size_counts(ct)
                numer = int(sum(counts[lo + 1:hi + 1]))
                scaled = incs[row] * 2.0 ** ct.w
                dyadic += scaled == numer
    return (
        curves.sum(axis=0), (curves ** 2).sum(axis=0),
        prods.sum(axis=0), (prods ** 2).sum(axis=0),
        mods.sum(axis=0), ws.sum(), incs if cfg.increment is not None else None,
        dyadic,
    )


def worker_count(workers: int | None = None) -> int:
    """Explicit request, else ``PERMDIV_THREADS``, else 1."""
    if workers is not None:
        if workers < 1:
            raise ValueError("worker count must be positive")
        return workers
    env = os.environ.get("PERMDIV_THREADS")
    if env is None:
        return 1
    try:
        value = int(env)
    except ValueError:
        raise ValueError(f"PERMDIV_THREADS must be a positive integer, got {env!r}") from None
    if value < 1:
        raise ValueError(f"PERMDIV_THREADS must be a positive integer, got {env!r}")
    return value


def run_ensemble(cfg: EnsembleConfig, workers: int | None = None) -> EnsembleReport:
    """Simulate ``cfg.samples`` trajectories and aggregate their statistics."""
    if cfg.n * cfg.samples > WORK_CAP:
        raise ResourceError(f"n * samples = {cfg.n * cfg.samples} exceeds the cap {WORK_CAP}")
    workers = worker_count(workers)
    tasks = [(cfg, s, min(s + CHUNK, cfg.samples)) for s in range(0, cfg.samples, CHUNK)]
    if workers == 1 or len(tasks) == 1:
        parts = [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            parts = list(pool.map(_run_chunk, tasks))

    M = cfg.samples
    curve_sum = np.zeros_like(parts[0][0])
    curve_sq = np.zeros_like(parts[0][1])
    prod_sum = np.zeros_like(parts[0][2])
    prod_sq = np.zeros_like(parts[0][3])
    mod_sum = np.zeros_like(parts[0][4])
    w_sum = 0.0
    dyadic = 0
    incs = []
    for p in parts:
        curve_sum += p[0]
        curve_sq += p[1]
        prod_sum += p[2]
        prod_sq += p[3]
        mod_sum += p[4]
        w_sum += p[5]
        if p[6] is not None:
            incs.append(p[6])
        dyadic += p[7]

    mean_curve = curve_sum / M
    mean_curve[-1] = 1.0 if abs(mean_curve[-1] - 1.0) < 1e-12 else mean_curve[-1]
    se_curve = _std_error(curve_sq, mean_curve, M)
    prod_mean = prod_sum / M
    prod_se = _std_error(prod_sq, prod_mean, M)
    moments = [
        (len(tv), tuple(float(x) for x in tv), float(prod_mean[k]), float(prod_se[k]))
        for k, tv in enumerate(cfg.moments)
    ]
    modulus = [(float(a), float(mod_sum[k] / M)) for k, a in enumerate(cfg.windows)]
    histogram: dict[float, float] = {}
    if incs:
        rounded = np.round(np.concatenate(incs) * ATOM_DENOMINATOR) / ATOM_DENOMINATOR
        counts = Counter(rounded.tolist())
        histogram = {float(v): counts[v] / M for v in sorted(counts)}

    report = EnsembleReport(
        config=cfg,
        grid=cfg.time_grid(),
        mean_curve=mean_curve,
        mean_curve_se=se_curve,
        moment_estimates=moments,
        modulus_table=modulus,
        increment_histogram=histogram,
        mean_cycles=w_sum / M,
        increments_checked=M if (incs and cfg.theta == 1.0) else 0,
        increments_dyadic=int(dyadic),
    )
    if cfg.uniform:
        report.oracle_distances["mean_curve_sup"] = compare_mean_curve(report, cfg.theta)
    return report


def _std_error(sq_sum, mean, M):
    if M < 2:
        return np.zeros_like(mean)
    var = np.maximum(sq_sum / M - mean ** 2, 0.0) * M / (M - 1)
    return np.sqrt(var / M)


def compare_mean_curve(report: EnsembleReport, theta: float) -> float:
    """Sup over the report grid of ``|mean curve - Beta(p, 1-p) cdf|``."""
    limit = mean_curve_limit(report.grid, theta)
    return float(np.max(np.abs(report.mean_curve - limit)))


def verify_joint_moments(cfg: EnsembleConfig, l: int, tvec, report: EnsembleReport | None = None,
                         oracle_samples: int = 10**6) -> tuple[float, float, float]:
    """Empirical mixed moment against the Dirichlet limit; returns
    ``(empirical, oracle, z)`` with ``z`` combining both standard errors."""
    if not 1 <= l <= 4:
        raise ValueError("l must lie in 1..4")
    tvec = tuple(float(t) for t in np.ravel(tvec))
    if len(tvec) != l:
        raise ValueError(f"expected {l} times, got {len(tvec)}")
    if report is None or tvec not in [m[1] for m in report.moment_estimates]:
        cfg = EnsembleConfig(**{**cfg.__dict__, "moments": (tvec,)})
        report = run_ensemble(cfg)
    _, _, emp, emp_se = next(m for m in report.moment_estimates if m[1] == tvec)
    oracle, oracle_se = limit_joint_moment(cfg.theta, l, tvec, oracle_samples,
                                           RngStream(cfg.seed, 1 << 40))
    spread = math.hypot(emp_se, oracle_se)
    diff = emp - oracle
    z = 0.0 if diff == 0 else diff / spread if spread > 0 else math.copysign(math.inf, diff)
    return emp, oracle, z


def modulus_scaling_study(cfg: EnsembleConfig, avec, report: EnsembleReport | None = None):
    """Rows ``(a, mean Q(a), mean Q(a) / a**p)`` with ``p = theta/(1+theta)``."""
    avec = tuple(float(a) for a in avec)
    if any(not a > 0 for a in avec):
        raise ValueError("window sizes must be positive")
    if report is None or tuple(a for a, _ in report.modulus_table) != avec:
        cfg = EnsembleConfig(**{**cfg.__dict__, "windows": avec})
        report = run_ensemble(cfg)
    p = cfg.theta / (1.0 + cfg.theta)
    return [(a, q, q / min(a, 1.0) ** p) for a, q in report.modulus_table]


@dataclass
class IncrementStudy:
    s: float
    t: float
    histogram: dict[float, float]
    top_atoms: list[tuple[float, float]]
    top_atom_mass: float
    dyadic_checked: bool
    all_dyadic: bool | None


def increment_atom_study(cfg: EnsembleConfig, s: float, t: float, atoms: int = 20) -> IncrementStudy:
    """Distribution of ``X(t) - X(s)`` across the ensemble.

    With ``theta == 1`` every increment is also checked to equal
    ``k / 2**w`` exactly, using integer divisor counts.
    """
    if not 0 < s <= t < 1:
        raise ValueError(f"need 0 < s <= t < 1, got s={s}, t={t}")
    report = run_ensemble(EnsembleConfig(**{**cfg.__dict__, "increment": (s, t)}))
    hist = report.increment_histogram
    top = sorted(hist.items(), key=lambda kv: (-kv[1], kv[0]))[:atoms]
    checked = cfg.theta == 1.0
    return IncrementStudy(
        s=s, t=t, histogram=hist, top_atoms=top,
        top_atom_mass=float(sum(m for _, m in top)),
        dyadic_checked=checked,
        all_dyadic=(report.increments_dyadic == report.increments_checked) if checked else None,
    )


def total_variation(p: dict[float, float], q: dict[float, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
