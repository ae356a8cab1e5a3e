import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from permdiv.cycletype import CycleType, enumerate_cycle_types, sample_uniform_cycle_type
from permdiv.divproc import (
    DivisorSizeDistribution,
    Trajectory,
    Weight,
    binomial_convolution,
    divisor_char_fn,
    divisor_size_counts,
    divisor_size_distribution,
    log_total_weight,
    modulus_of_continuity,
    total_weight,
    trajectory_eval,
)
from permdiv.rng import RngStream

from conftest import brute_divisor_counts, brute_divisor_law


def test_weight_validation():
    with pytest.raises(ValueError):
        Weight(0.0)
    with pytest.raises(ValueError):
        Weight(-1.0)
    assert Weight(2.0).limit_param == pytest.approx(2 / 3)


def test_distribution_hand_examples():
    d = divisor_size_distribution(CycleType.from_lengths(3, [1, 2]), 1.0)
    np.testing.assert_allclose(d.c, [0.25, 0.25, 0.25, 0.25], atol=1e-15)
    d = divisor_size_distribution(CycleType.from_lengths(3, [3]), 1.0)
    np.testing.assert_allclose(d.c, [0.5, 0, 0, 0.5], atol=1e-15)
    d = divisor_size_distribution(CycleType.from_lengths(2, [1, 1]), 2.0)
    np.testing.assert_allclose(d.c, [1 / 9, 4 / 9, 4 / 9], atol=1e-15)


@pytest.mark.parametrize("n", range(1, 9))
@pytest.mark.parametrize("theta", [0.3, 1.0, 2.5])
def test_distribution_matches_subset_enumeration(n, theta):
    for ct in enumerate_cycle_types(n):
        d = divisor_size_distribution(ct, theta)
        np.testing.assert_allclose(d.c, brute_divisor_law(ct, theta), rtol=0, atol=1e-12)
        assert d.c[0] == pytest.approx((1 + theta) ** -ct.w, rel=1e-13)


@settings(max_examples=80, deadline=None)
@given(n=st.integers(1, 1500), theta=st.floats(0.01, 50), seed=st.integers(0, 2**31))
def test_distribution_is_a_probability_vector(n, theta, seed):
    d = divisor_size_distribution(sample_uniform_cycle_type(n, RngStream(seed)), theta)
    assert np.all(d.c >= 0)
    assert abs(d.c.sum() - 1) < 1e-10
    tr = trajectory_eval(d, np.linspace(0, 1, 37))
    assert np.all(np.diff(tr.values) >= 0)
    assert tr.values[-1] == 1.0
    assert np.all(tr.values > 0)


def test_integer_counts_match_enumeration():
    for ct in enumerate_cycle_types(8):
        assert list(divisor_size_counts(ct)) == brute_divisor_counts(ct)


def test_integer_counts_switch_to_python_ints():
    ct = CycleType.from_lengths(70, [1] * 70)
    c = divisor_size_counts(ct)
    assert c.dtype == object
    assert [int(x) for x in c] == [math.comb(70, k) for k in range(71)]


def test_total_weight():
    ct3 = CycleType.from_lengths(6, [1, 2, 3])
    assert total_weight(ct3, 1.0) == pytest.approx(8.0)
    assert total_weight(CycleType.from_lengths(3, [1, 2]), 2.0) == pytest.approx(9.0)
    assert total_weight(ct3, 1e-12) == pytest.approx(1.0)
    big = CycleType.from_lengths(5000, [1] * 5000)
    assert log_total_weight(big, 1.0) == pytest.approx(5000 * math.log(2))


def test_binomial_convolution():
    ones = [1.0] * 6
    assert binomial_convolution(ones, ones, 3) == pytest.approx(8.0)
    g = [2.0 ** s for s in range(6)]
    assert binomial_convolution(g, ones, 2) == pytest.approx(9.0)
    delta = [1.0, 0, 0, 0, 0, 0]
    for k in range(6):
        assert binomial_convolution(g, delta, k) == pytest.approx(g[k])
    with pytest.raises(IndexError):
        binomial_convolution(g, ones, 6)


def test_convolution_reproduces_total_weight():
    # f = g * 1 is completely multiplicative with f_j(1) = 1 + theta
    theta = 0.7
    g = [theta ** s for s in range(5)]
    ones = [1.0] * 5
    for k in range(5):
        assert binomial_convolution(g, ones, k) == pytest.approx((1 + theta) ** k)


def test_trajectory_examples():
    d = DivisorSizeDistribution(3, np.array([0.25, 0.25, 0.25, 0.25]))
    tr = trajectory_eval(d, [0, 1 / 3, 2 / 3, 1])
    np.testing.assert_allclose(tr.values, [0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(tr.increments(), [0.25, 0.25, 0.25])
    d = DivisorSizeDistribution(3, np.array([0.5, 0, 0, 0.5]))
    assert trajectory_eval(d, [0.99]).values[0] == 0.5
    assert trajectory_eval(d, [1.0]).values[0] == 1.0


def test_trajectory_inclusive_at_lattice_points():
    d = divisor_size_distribution(CycleType.from_lengths(10, [3, 7]), 1.0)
    tr = trajectory_eval(d, [0.29, 0.3, 0.69, 0.7])
    np.testing.assert_allclose(tr.values, [0.25, 0.5, 0.5, 0.75])


def test_trajectory_rejects_bad_grids():
    d = DivisorSizeDistribution(1, np.array([0.5, 0.5]))
    for grid in ([], [0.5, 0.5], [0.7, 0.2], [1.5]):
        with pytest.raises(ValueError):
            trajectory_eval(d, grid)


def test_modulus_examples():
    d = DivisorSizeDistribution(2, np.array([0.5, 0.5, 0.0]))
    assert modulus_of_continuity(d, 0.1) == 0.5
    d = DivisorSizeDistribution(3, np.array([0.25, 0.25, 0.25, 0.25]))
    assert modulus_of_continuity(d, 0.34) == pytest.approx(0.5)
    tr = trajectory_eval(d, np.arange(4) / 3)
    assert modulus_of_continuity(tr, 0.34) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        modulus_of_continuity(d, 1.0)


def _brute_modulus(c, a):
    # closed windows [x, x + a] placed at every lattice start
    n = len(c) - 1
    best = 0.0
    for lo in range(1, n + 1):
        best = max(best, sum(c[k] for k in range(lo, n + 1) if (k - lo) / n <= a + 1e-12))
    return best


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 40), seed=st.integers(0, 2**31), a=st.floats(0.01, 0.99))
def test_modulus_matches_window_scan(n, seed, a):
    d = divisor_size_distribution(sample_uniform_cycle_type(n, RngStream(seed)), 1.0)
    assert modulus_of_continuity(d, a) == pytest.approx(_brute_modulus(d.c, a), abs=1e-12)
    assert modulus_of_continuity(d, 1 - 1e-9) == pytest.approx(1 - d.c[0], abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 500), seed=st.integers(0, 2**31))
def test_modulus_nondecreasing_in_window(n, seed):
    d = divisor_size_distribution(sample_uniform_cycle_type(n, RngStream(seed)), 1.3)
    values = [modulus_of_continuity(d, a) for a in np.linspace(0.01, 0.99, 25)]
    assert all(x <= y + 1e-15 for x, y in zip(values, values[1:]))


def test_char_fn_examples():
    ct = CycleType.from_lengths(2, [1, 1])
    assert divisor_char_fn(ct, 1.0, 0.0) == 1.0
    assert abs(divisor_char_fn(ct, 1.0, math.pi)) < 1e-15


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), theta=st.floats(0.1, 5), v=st.floats(-10, 10))
def test_char_fn_matches_fourier_sum(seed, theta, v):
    ct = sample_uniform_cycle_type(50, RngStream(seed))
    c = divisor_size_distribution(ct, theta).c
    fourier = complex(np.sum(c * np.exp(1j * v * np.arange(c.size))))
    g = divisor_char_fn(ct, theta, v)
    assert abs(g - fourier) < 1e-9
    assert abs(g) <= 1 + 1e-12


def test_char_fn_fixed_example():
    ct = sample_uniform_cycle_type(50, RngStream(2024))
    c = divisor_size_distribution(ct, 1.0).c
    fourier = complex(np.sum(c * np.exp(0.7j * np.arange(51))))
    assert abs(divisor_char_fn(ct, 1.0, 0.7) - fourier) < 1e-9


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 800), seed=st.integers(0, 2**31))
def test_unit_weight_values_are_dyadic(n, seed):
    ct = sample_uniform_cycle_type(n, RngStream(seed))
    cdf = divisor_size_distribution(ct, 1.0).cdf()
    scaled = cdf * 2.0 ** ct.w
    assert np.all(scaled == np.round(scaled))
    exact = np.cumsum(divisor_size_counts(ct))
    assert [Fraction(x) for x in cdf] == [Fraction(int(e), 2 ** ct.w) for e in exact]
