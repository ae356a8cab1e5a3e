import itertools
from fractions import Fraction

import pytest

from permdiv.cycletype import CycleType


def cycle_lengths(perm):
    """Cycle lengths of a labelled permutation given as a tuple image."""
    seen = [False] * len(perm)
    out = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        j, length = start, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        out.append(length)
    return out


def all_cycle_types(n):
    """Every permutation of S_n reduced to its cycle type (with repetition)."""
    return [CycleType.from_lengths(n, cycle_lengths(p)) for p in itertools.permutations(range(n))]


def brute_divisor_law(ct, theta):
    """Weights of divisor sizes by summing over all 2**w subsets of cycles."""
    lengths = ct.lengths()
    c = [0.0] * (ct.n + 1)
    for mask in range(1 << len(lengths)):
        size = sum(L for i, L in enumerate(lengths) if mask >> i & 1)
        c[size] += theta ** bin(mask).count("1")
    total = (1 + theta) ** len(lengths)
    return [x / total for x in c]


def brute_divisor_counts(ct):
    lengths = ct.lengths()
    c = [0] * (ct.n + 1)
    for mask in range(1 << len(lengths)):
        c[sum(L for i, L in enumerate(lengths) if mask >> i & 1)] += 1
    return c


@pytest.fixture(scope="session")
def s4_types():
    return all_cycle_types(4)
