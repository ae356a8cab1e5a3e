"""Divisor-size laws and the trajectories built from them.

For a permutation with cycle type ``ct`` and cycle weight ``theta``, every
subset of cycles (a divisor) gets weight ``theta**(number of cycles)``.
Normalising by the total weight ``(1 + theta)**w`` gives a law on divisor
sizes ``0..n``; its distribution function on ``[0, 1]`` (sizes scaled by
``1/n``) is the trajectory ``X_n(sigma, t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cycletype import CapacityError, CycleType

MAX_DEGREE = 10**6


@dataclass(frozen=True)
class Weight:
    """Constant cycle weight ``theta`` of a completely multiplicative g."""

    theta: float

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ValueError(f"theta must be a positive finite number, got {self.theta}")

    @property
    def limit_param(self) -> float:
        """``theta / (1 + theta)``, the first beta parameter of the mean curve."""
        return self.theta / (1.0 + self.theta)


def _as_weight(w) -> Weight:
    return w if isinstance(w, Weight) else Weight(float(w))


@dataclass(frozen=True)
class DivisorSizeDistribution:
    n: int
    c: np.ndarray

    def cdf(self) -> np.ndarray:
        """Values of the trajectory on the lattice ``k/n``, ``k = 0..n``."""
        out = np.cumsum(self.c)
        out[-1] = 1.0 if abs(out[-1] - 1.0) < 1e-9 else out[-1]
        return out


@dataclass(frozen=True)
class Trajectory:
    grid: np.ndarray
    values: np.ndarray

    def increments(self) -> np.ndarray:
        return np.diff(self.values)


def divisor_size_distribution(ct: CycleType, w) -> DivisorSizeDistribution:
    """Coefficients of ``prod over cycles (1 + theta z**j) / (1 + theta)``.

    Each factor is applied in normalised form so every intermediate
    coefficient stays in ``[0, 1]``.
    """
    theta = _as_weight(w).theta
    n = ct.n
    if n > MAX_DEGREE:
        raise CapacityError(f"n={n} exceeds the dense storage cap {MAX_DEGREE}")
    keep = 1.0 / (1.0 + theta)
    take = theta / (1.0 + theta)
    c = np.zeros(n + 1)
    c[0] = 1.0
    top = 0  # highest index that can be nonzero
    for j, k in ct.parts:
        for _ in range(k):
            hi = top + j
            c[j:hi + 1] = keep * c[j:hi + 1] + take * c[0:top + 1]
            c[:j] *= keep
            top = hi
    return DivisorSizeDistribution(n, c)


def divisor_size_counts(ct: CycleType) -> np.ndarray:
    """Exact number of divisors of each size (the ``theta = 1`` numerators).

    int64 while ``2**w`` fits, Python integers beyond that.
    """
    dtype = np.int64 if ct.w < 62 else object
    c = np.zeros(ct.n + 1, dtype=dtype)
    c[0] = 1
    top = 0
    for j, k in ct.parts:
        for _ in range(k):
            c[j:top + j + 1] = c[j:top + j + 1] + c[0:top + 1]
            top += j
    return c


def log_total_weight(ct: CycleType, w) -> float:
    return ct.w * math.log1p(_as_weight(w).theta)


def total_weight(ct: CycleType, w) -> float:
    """``f(sigma) = (1 + theta)**w``, the summed weight of all divisors."""
    return math.exp(log_total_weight(ct, w))


def binomial_convolution(g_vals, h_vals, k: int) -> float:
    """``sum_s C(k, s) g(s) h(k - s)`` for per-length multiplicative pieces."""
    if k < 0 or k >= len(g_vals) or k >= len(h_vals):
        raise IndexError(f"index k={k} outside the supplied value tables")
    return math.fsum(math.comb(k, s) * g_vals[s] * h_vals[k - s] for s in range(k + 1))


def trajectory_eval(d: DivisorSizeDistribution, grid) -> Trajectory:
    """Evaluate ``X(t) = sum_{k <= floor(t n)} c_k`` on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d sequence")
    if np.any(grid < 0) or np.any(grid > 1):
        raise ValueError("grid times must lie in [0, 1]")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    cdf = d.cdf()
    return Trajectory(grid, cdf[lattice_index(grid, d.n)])


def lattice_index(t, n: int) -> np.ndarray:
    """``floor(t n)`` with a guard so products like ``0.3 * 10`` land on 3."""
    x = np.asarray(t, dtype=float) * n
    k = np.floor(x + 1e-9 * np.maximum(1.0, x))
    return np.clip(k, 0, n).astype(np.int64)


def modulus_of_continuity(tr, a: float) -> float:
    """Largest mass a closed window of length ``a`` captures.

    ``tr`` is a trajectory on the full lattice ``k/n`` (or a
    DivisorSizeDistribution). Only jumps at ``k >= 1`` count, since the atom
    at ``t = 0`` is part of every value ``X(t)`` and never of an increment.
    """
    if not 0 < a < 1:
        raise ValueError(f"window length a must lie in (0, 1), got {a}")
    if isinstance(tr, DivisorSizeDistribution):
        jumps = np.asarray(tr.c[1:], dtype=float)
    else:
        jumps = np.diff(np.asarray(tr.values, dtype=float))
    n = jumps.size
    if n == 0:
        return 0.0
    span = int(math.floor(a * n + 1e-9))  # lattice steps a window may cover
    csum = np.concatenate(([0.0], np.cumsum(jumps)))
    width = min(span + 1, n)
    windows = csum[width:] - csum[:-width]
    return float(max(windows.max(), 0.0))


def divisor_char_fn(ct: CycleType, w, v: float) -> complex:
    """``prod over cycles (1 + theta e^{i j v}) / (1 + theta)``."""
    theta = _as_weight(w).theta
    out = 1.0 + 0.0j
    for j, k in ct.parts:
        out *= ((1.0 + theta * np.exp(1j * j * v)) / (1.0 + theta)) ** k
    return complex(out)
