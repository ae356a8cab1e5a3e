"""Exact combinatorial quantities: friable/free probabilities, harmonic
tails, the long-cycle second-moment identity and exact trajectory moments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cycletype import (
    ENUMERATION_CAP,
    CapacityError,
    cycle_type_probability,
    enumerate_cycle_types,
    restricted_cycle_count_stats,
)
from .divproc import Weight, divisor_size_distribution, lattice_index
from .oracles import EULER_GAMMA

TABLE_CAP = 10**7


@dataclass(frozen=True)
class RecurrenceTable:
    kind: str  # "friable" or "free"
    r: int
    values: np.ndarray

    def __getitem__(self, m: int) -> float:
        return float(self.values[m])


def friable_table(size: int, r: int) -> RecurrenceTable:
    """``p(m)`` for ``m = 0..size``: probability that all cycles have length <= r.

    ``m p(m) = sum_{j=1}^{min(r, m)} p(m - j)``, with the window sum carried
    along.
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if not 0 <= size <= TABLE_CAP:
        raise CapacityError(f"table size {size} outside [0, {TABLE_CAP}]")
    p = np.empty(size + 1)
    p[0] = 1.0
    window = 1.0  # sum of p(m-r .. m-1) for the next m
    for m in range(1, size + 1):
        p[m] = window / m
        if m % r == 0:
            # resum: the running update keeps absolute error from early, larger
            # terms, which would swamp the window once p has decayed
            window = math.fsum(p[m - r + 1:m + 1])
        else:
            window += p[m]
            if m - r >= 0:
                window -= p[m - r]
    return RecurrenceTable("friable", r, p)


def free_table(size: int, r: int) -> RecurrenceTable:
    """``q(m)`` for ``m = 0..size``: probability that all cycles are longer than r.

    ``m q(m) = sum_{i=0}^{m-r-1} q(i)``.
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    if not 0 <= size <= TABLE_CAP:
        raise CapacityError(f"table size {size} outside [0, {TABLE_CAP}]")
    q = np.empty(size + 1)
    q[0] = 1.0
    prefix = np.zeros(size + 2)  # prefix[i] = q(0) + ... + q(i-1)
    prefix[1] = 1.0
    for m in range(1, size + 1):
        top = m - r  # number of terms q(0..m-r-1)
        q[m] = prefix[top] / m if top > 0 else 0.0
        prefix[m + 1] = prefix[m] + q[m]
    return RecurrenceTable("free", r, q)


def friable_probability(m: int, r: int) -> float:
    if m < 0:
        raise ValueError("m must be nonnegative")
    return friable_table(m, r)[m]


def free_probability(m: int, r: int) -> float:
    if m < 0:
        raise ValueError("m must be nonnegative")
    return free_table(m, r)[m]


def harmonic_tail(y: int, x: int) -> float:
    """``sum_{y < j <= x} 1/j``."""
    if not 0 <= y <= x:
        raise ValueError(f"need 0 <= y <= x, got y={y}, x={x}")
    if x == y:
        return 0.0
    return math.fsum(1.0 / np.arange(y + 1, x + 1, dtype=float))


def second_moment_identity(n: int, r: int) -> tuple[float, float]:
    """Both sides of the exact second-moment identity for long cycles.

    ``lhs`` is ``E (w_r - h(r, n))**2`` where ``w_r`` counts cycles longer
    than ``r``, from the exact cycle-count moments. ``rhs`` is
    ``h(r, n) - sum_{r < i, j <= n, i + j > n} 1/(ij)``.
    """
    mean, var = restricted_cycle_count_stats(n, r)
    h = harmonic_tail(r, n)
    lhs = var + (mean - h) ** 2

    # for each i, sum 1/j over max(r, n - i) < j <= n
    i = np.arange(r + 1, n + 1)
    H = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, n + 1))))
    lo = np.maximum(r, n - i)
    tail = math.fsum((H[n] - H[lo]) / i)
    rhs = h - tail
    if rhs > h + 1e-12:
        raise ArithmeticError("identity right-hand side exceeds the harmonic tail")
    return lhs, rhs


def exact_lattice_mean(n: int, w, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """``E X_n(k/n)`` for ``k = 0..n``, summed over all cycle types."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > cap:
        raise CapacityError(f"n={n} exceeds the enumeration cap {cap}")
    w = w if isinstance(w, Weight) else Weight(float(w))
    acc = np.zeros(n + 1)
    for ct in enumerate_cycle_types(n, cap):
        acc += cycle_type_probability(ct) * divisor_size_distribution(ct, w).cdf()
    return acc


def exact_moments(n: int, w, l: int, tvec, cap: int = ENUMERATION_CAP) -> float:
    """Exact ``E_n prod_i X_n(t_i)`` under the uniform measure (``n <= cap``)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > cap:
        raise CapacityError(f"n={n} exceeds the enumeration cap {cap}")
    tvec = np.asarray(tvec, dtype=float).ravel()
    if tvec.size != l:
        raise ValueError(f"expected {l} times, got {tvec.size}")
    if np.any(tvec < 0) or np.any(tvec > 1):
        raise ValueError("times must lie in [0, 1]")
    w = w if isinstance(w, Weight) else Weight(float(w))
    idx = lattice_index(tvec, n)
    total = 0.0
    for ct in enumerate_cycle_types(n, cap):
        cdf = divisor_size_distribution(ct, w).cdf()
        total += cycle_type_probability(ct) * float(np.prod(cdf[idx]))
    return total


def mean_value_upper_bound(qvals, c: float = 1.0) -> float:
    """Upper bound ``(e^gamma + c/n) exp(sum_j (q_j - 1)/j)`` on ``E_n q``
    for completely multiplicative ``q`` with ``q_j(1) = qvals[j-1]`` in [0, 1]."""
    q = np.asarray(qvals, dtype=float).ravel()
    n = q.size
    if n == 0:
        raise ValueError("need at least one value")
    if np.any(q < 0) or np.any(q > 1):
        raise ValueError("values must lie in [0, 1]")
    j = np.arange(1, n + 1)
    return (math.exp(EULER_GAMMA) + c / n) * math.exp(math.fsum((q - 1.0) / j))
