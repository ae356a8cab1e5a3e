"""Cycle types of random permutations.

A permutation enters every quantity in this package only through its cycle
vector ``k_1, ..., k_n``, so the samplers below never build labelled
permutations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .rng import as_generator

ENUMERATION_CAP = 60
_LOG_SPACE_ABOVE = 170


class CapacityError(ValueError):
    """Requested size exceeds a configured enumeration or table cap."""


@dataclass(frozen=True)
class CycleType:
    """Cycle vector of a permutation of degree ``n``.

    ``parts`` holds ``(length, multiplicity)`` pairs with positive
    multiplicities, sorted by length.
    """

    n: int
    parts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("degree must be nonnegative")
        size = 0
        prev = 0
        for j, k in self.parts:
            if j <= prev or k <= 0:
                raise ValueError(f"malformed cycle type parts {self.parts!r}")
            prev = j
            size += j * k
        if size != self.n:
            raise ValueError(f"cycle lengths sum to {size}, expected n={self.n}")

    @classmethod
    def from_lengths(cls, n: int, lengths) -> "CycleType":
        counts: dict[int, int] = {}
        for j in lengths:
            j = int(j)
            counts[j] = counts.get(j, 0) + 1
        return cls(n, tuple(sorted(counts.items())))

    @classmethod
    def from_counts(cls, counts) -> "CycleType":
        """Build from the dense vector ``(k_1, ..., k_n)``."""
        parts = tuple((j, int(k)) for j, k in enumerate(counts, start=1) if k)
        return cls(len(counts), parts)

    @property
    def counts(self) -> tuple[int, ...]:
        dense = [0] * self.n
        for j, k in self.parts:
            dense[j - 1] = k
        return tuple(dense)

    @property
    def w(self) -> int:
        """Number of cycles."""
        return sum(k for _, k in self.parts)

    def lengths(self) -> list[int]:
        """Cycle lengths in nondecreasing order, one entry per cycle."""
        out = []
        for j, k in self.parts:
            out.extend([j] * k)
        return out


def sample_uniform_cycle_type(n: int, rng=None) -> CycleType:
    """Cycle type of a uniformly random permutation of degree ``n``.

    The cycle through the smallest unused label has a length uniform on
    ``1..m`` where ``m`` is the number of labels left, so ``w`` draws suffice.
    """
    if n < 1:
        raise ValueError("n must be >= 1 (use enumerate_cycle_types for n=0)")
    gen = as_generator(rng)
    lengths = []
    m = n
    while m > 0:
        j = int(gen.integers(1, m + 1))
        lengths.append(j)
        m -= j
    return CycleType.from_lengths(n, lengths)


def sample_ewens_cycle_type(n: int, ewens: float, rng=None) -> CycleType:
    """Cycle type under the Ewens measure with parameter ``ewens``.

    Uses the Feller coupling: independent indicators with success
    probability ``ewens / (ewens + i - 1)``; cycle lengths are the gaps
    between successive successes.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not ewens > 0:
        raise ValueError(f"ewens parameter must be positive, got {ewens}")
    gen = as_generator(rng)
    i = np.arange(n, dtype=float)
    hits = gen.random(n) < ewens / (ewens + i)
    hits[0] = True
    starts = np.flatnonzero(hits)
    lengths = np.diff(np.append(starts, n))
    return CycleType.from_lengths(n, lengths)


def log_cycle_type_probability(ct: CycleType) -> float:
    """Natural log of ``prod_j 1 / (j**k_j * k_j!)``."""
    return -sum(k * math.log(j) + math.lgamma(k + 1) for j, k in ct.parts)


def cycle_type_probability(ct: CycleType) -> float:
    """Probability that a uniform permutation of degree ``ct.n`` has type ``ct``."""
    if ct.n > _LOG_SPACE_ABOVE:
        return math.exp(log_cycle_type_probability(ct))
    p = 1.0
    for j, k in ct.parts:
        p /= float(j) ** k * math.factorial(k)
    return p


def _partitions(n: int) -> Iterator[list[int]]:
    # parts in nonincreasing order, partitions in reverse lexicographic order
    if n == 0:
        yield []
        return
    a = [n]
    while True:
        yield list(a)
        # rightmost part larger than 1
        i = len(a) - 1
        ones = 0
        while i >= 0 and a[i] == 1:
            ones += 1
            i -= 1
        if i < 0:
            return
        rest = ones + 1
        v = a[i] - 1
        del a[i:]
        a.append(v)
        while rest > v:
            a.append(v)
            rest -= v
        if rest:
            a.append(rest)


def enumerate_cycle_types(n: int, cap: int = ENUMERATION_CAP) -> Iterator[CycleType]:
    """Yield every cycle type of degree ``n``, once each."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > cap:
        raise CapacityError(f"n={n} exceeds the enumeration cap {cap}")
    for parts in _partitions(n):
        yield CycleType.from_lengths(n, parts)


def restricted_cycle_count_stats(n: int, r: int) -> tuple[float, float]:
    """Exact mean and variance of the number of cycles longer than ``r``.

    Uses ``E k_j = 1/j``, ``E k_i k_j = 1/(ij)`` when ``i != j`` and
    ``i + j <= n`` (zero otherwise), and ``E k_j (k_j - 1) = 1/j**2`` when
    ``2j <= n``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= r < n:
        raise ValueError(f"r must lie in [0, n), got r={r}, n={n}")
    j = np.arange(r + 1, n + 1, dtype=float)
    inv = 1.0 / j
    mean = float(math.fsum(inv))

    # H[m] = sum_{r < i <= m} 1/i, zero for m <= r
    H = np.zeros(n + 1)
    H[r + 1:] = np.cumsum(inv)
    partner_cap = n - np.arange(r + 1, n + 1)
    pair = inv * H[partner_cap]
    # drop the i == j terms that the prefix sum picked up
    diag = 2 * np.arange(r + 1, n + 1) <= n
    pair = pair - np.where(diag, inv * inv, 0.0)
    second = mean + float(math.fsum(np.where(diag, inv * inv, 0.0))) + float(math.fsum(pair))
    return mean, second - mean * mean
