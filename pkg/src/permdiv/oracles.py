"""Limit-law functions the simulated quantities are compared against."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Chebyshev
from numpy.polynomial import chebyshev as C
from scipy.special import roots_jacobi

from .rng import RngStream, as_generator

EULER_GAMMA = 0.57721566490153286061

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXITER = 10_000


def _beta_cf(t: float, a: float, b: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * t / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXITER):
        m2 = 2 * m
        aa = m * (b - m) * t / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * t / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge at t={t}, a={a}, b={b}")


def regularized_incomplete_beta(t: float, a: float, b: float) -> float:
    """Beta(a, b) distribution function at ``t``.

    ``I_t(a, b) = int_0^t v**(a-1) (1-v)**(b-1) dv / B(a, b)``.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if not (a > 0 and b > 0):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(t) + b * math.log1p(-t)
    )
    front = math.exp(log_front)
    if t < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(t, a, b) / a
    return 1.0 - front * _beta_cf(1.0 - t, b, a) / b


def arcsine_cdf(t):
    """``2/pi * arcsin(sqrt(t))``, the Beta(1/2, 1/2) distribution function."""
    return 2.0 / math.pi * np.arcsin(np.sqrt(t))


def mean_curve_limit(t, theta: float):
    """Limit of the expected trajectory: Beta(p, 1-p) cdf with ``p = theta/(1+theta)``."""
    p = theta / (1.0 + theta)
    if np.ndim(t) == 0:
        return regularized_incomplete_beta(float(t), p, 1.0 - p)
    return np.array([regularized_incomplete_beta(float(x), p, 1.0 - p) for x in np.ravel(t)])


class _DelayTable:
    """Piecewise Chebyshev solution of a unit-delay equation.

    Piece ``k`` covers ``[k, k+1]``; pieces are appended on demand and never
    modified afterwards.
    """

    degree = 40

    def __init__(self):
        self._pieces: list[Chebyshev] = []
        self._lock = threading.Lock()

    def _extend(self):
        raise NotImplementedError

    def piece(self, k: int) -> Chebyshev:
        if k >= len(self._pieces):
            with self._lock:
                while k >= len(self._pieces):
                    self._extend()
        return self._pieces[k]


def _collocation(degree: int):
    """Chebyshev points on [0, 1] and the matrix mapping node values to the
    node values of their antiderivative from 0."""
    y = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))[::-1]
    vander = C.chebvander(y, degree)
    to_coef = np.linalg.inv(vander)
    integ = np.empty_like(to_coef)
    for i in range(degree + 1):
        integ[:, i] = C.chebval(y, C.chebint(to_coef[:, i], lbnd=-1)) * 0.5
    return 0.5 * (y + 1.0), to_coef, integ


class _DickmanTable(_DelayTable):
    # piece k holds rho(u) / rho(k); _log_at[k] = log rho(k).
    # Each piece solves u rho(u) - int_k^u rho = int_{u-1}^k rho, whose
    # terms are all positive, so no cancellation builds up with k.

    def __init__(self):
        super().__init__()
        self._log_at: list[float] = []
        self._nodes, self._to_coef, self._integ = _collocation(self.degree)

    def _extend(self):
        k = len(self._pieces)
        if k == 0:
            self._pieces.append(Chebyshev([1.0], domain=[0, 1]))
            self._log_at.append(0.0)
            return
        prev = self._pieces[k - 1]
        prev_int = prev.integ(lbnd=k - 1)
        u = k + self._nodes
        rhs = prev_int(float(k)) - prev_int(u - 1.0)
        y = np.linalg.solve(np.diag(u) - self._integ, rhs)  # rho / rho(k-1)
        piece = Chebyshev(self._to_coef @ y, domain=[k, k + 1])
        ratio = float(piece(float(k)))
        self._pieces.append(piece / ratio)
        self._log_at.append(self._log_at[k - 1] + math.log(ratio))

    def log_value(self, u: float) -> float:
        k = min(int(math.floor(u)), MAX_DICKMAN_U - 1)
        piece = self.piece(k)
        return self._log_at[k] + math.log(piece(u))


class _BuchstabTable(_DelayTable):
    # piece k holds omega(u) on [k, k+1]; piece 0 unused

    def _extend(self):
        k = len(self._pieces)
        if k < 2:
            self._pieces.append(Chebyshev.interpolate(lambda u: 1.0 / u, self.degree, domain=[1, 2]))
            return
        prev = self._pieces[k - 1]
        start = k * prev(float(k))
        integrand = Chebyshev.interpolate(lambda v: prev(v - 1.0), self.degree, domain=[k, k + 1])
        antider = integrand.integ(lbnd=k)
        self._pieces.append(Chebyshev.interpolate(
            lambda u: (start + antider(u)) / u, self.degree, domain=[k, k + 1]))


MAX_DICKMAN_U = 500
_BUCHSTAB_FLAT = 60.0

_dickman = _DickmanTable()
_buchstab = _BuchstabTable()


def log_dickman_rho(u: float) -> float:
    """Natural log of the Dickman function; finite over the whole range."""
    if u < 0:
        raise ValueError(f"u must be nonnegative, got {u}")
    if u > MAX_DICKMAN_U:
        raise ValueError(f"u must not exceed {MAX_DICKMAN_U}, got {u}")
    if u <= 1.0:
        return 0.0
    return _dickman.log_value(float(u))


def dickman_rho(u: float) -> float:
    """Dickman function: 1 on [0, 1], then ``u rho'(u) + rho(u-1) = 0``.

    Underflows to 0.0 past u of roughly 140; use log_dickman_rho there.
    """
    return math.exp(log_dickman_rho(u))


def buchstab_omega(u: float) -> float:
    """Buchstab function: ``1/u`` on [1, 2], then ``(u w(u))' = w(u-1)``."""
    if u < 1:
        raise ValueError(f"u must be >= 1, got {u}")
    if u >= _BUCHSTAB_FLAT:
        # |omega - e^-gamma| is below rho(u), far under double precision here
        return math.exp(-EULER_GAMMA)
    if u == 2.0:
        return 0.5
    k = int(math.floor(u))
    return float(_buchstab.piece(k)(float(u)))


@dataclass(frozen=True)
class MomentParams:
    """Dirichlet shapes ``e(m) = theta**digitsum(m) * (1+theta)**(-base)``."""

    l: int
    theta: float
    e: np.ndarray
    exponent_base: str = "l"

    @property
    def r(self) -> int:
        return 2 ** self.l - 1

    def digits(self) -> np.ndarray:
        """``D[j, m]`` = binary digit ``j`` of ``m``, shape ``(l, 2**l)``."""
        m = np.arange(2 ** self.l)
        return ((m[None, :] >> np.arange(self.l)[:, None]) & 1).astype(np.int8)


def dirichlet_moment_params(theta: float, l: int, exponent_base: str = "l") -> MomentParams:
    """Shapes of the Dirichlet law whose region probabilities are the limit moments.

    ``exponent_base="r"`` uses ``(1+theta)**-(2**l - 1)`` instead of
    ``(1+theta)**-l``; the shapes then no longer sum to one and only serve
    side-by-side comparison.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if not 1 <= l <= 10:
        raise ValueError(f"l must lie in 1..10, got {l}")
    if exponent_base not in ("l", "r"):
        raise ValueError("exponent_base must be 'l' or 'r'")
    power = l if exponent_base == "l" else 2 ** l - 1
    m = np.arange(2 ** l)
    digit_sum = np.array([bin(int(x)).count("1") for x in m])
    e = np.exp(digit_sum * math.log(theta) - power * math.log1p(theta))
    return MomentParams(l, float(theta), e, exponent_base)


def _log_gamma_variates(gen: np.random.Generator, shapes: np.ndarray, size: int) -> np.ndarray:
    # G_a = G_{a+1} * U**(1/a), kept in log space so tiny shapes cannot underflow
    g = gen.standard_gamma(shapes + 1.0, size=(size, shapes.size))
    u = gen.random((size, shapes.size))
    return np.log(g) + np.log1p(-u) / shapes


def sample_dirichlet(params: MomentParams, rng=None, size: int | None = None) -> np.ndarray:
    """Draw ``(v_1, ..., v_r)``; component 0 is the slack ``1 - sum(v)``.

    Returns shape ``(r,)`` for a single draw, else ``(size, r)``.
    """
    e = np.asarray(params.e, dtype=float)
    if np.any(e <= 0):
        raise ValueError("all Dirichlet shapes must be positive")
    gen = as_generator(rng)
    lg = _log_gamma_variates(gen, e, 1 if size is None else size)
    lg -= lg.max(axis=1, keepdims=True)
    g = np.exp(lg)
    v = g / g.sum(axis=1, keepdims=True)
    v = v[:, 1:]
    return v[0] if size is None else v


_JOINT_CHUNK = 1 << 16


def limit_joint_moment(theta: float, l: int, tvec, samples: int = 10**6,
                       rng=None, exponent_base: str = "l") -> tuple[float, float]:
    """Monte Carlo value of the limiting mixed moment ``E prod_i X(t_i)``.

    Estimates ``P(u_j(V) <= t_j for j < l)`` with ``V`` Dirichlet and
    ``u_j(V)`` the total mass on indices whose binary digit ``j`` is 1.
    Chunk ``c`` draws from stream ``(seed, c)``, so the result depends only
    on the seed and ``samples``.
    """
    tvec = np.asarray(tvec, dtype=float).ravel()
    if tvec.size != l:
        raise ValueError(f"expected {l} times, got {tvec.size}")
    if np.any(tvec <= 0) or np.any(tvec > 1):
        raise ValueError("times must lie in (0, 1]")
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    params = dirichlet_moment_params(theta, l, exponent_base)
    if isinstance(rng, RngStream):
        base = rng
    elif rng is None or isinstance(rng, (int, np.integer)):
        base = RngStream(20240601 if rng is None else int(rng))
    else:
        raise TypeError("rng must be an RngStream or an integer seed")
    e = params.e
    digits = params.digits().astype(float)  # (l, 2**l)
    hits = 0
    done = 0
    chunk = 0
    while done < samples:
        size = min(_JOINT_CHUNK, samples - done)
        gen = RngStream(base.seed, (base.stream_id << 20) + chunk).generator()
        lg = _log_gamma_variates(gen, e, size)
        lg -= lg.max(axis=1, keepdims=True)
        g = np.exp(lg)
        v = g / g.sum(axis=1, keepdims=True)
        u = v @ digits.T  # (size, l)
        hits += int(np.count_nonzero(np.all(u <= tvec, axis=1)))
        done += size
        chunk += 1
    p = hits / samples
    se = math.sqrt(max(p * (1 - p), 0.0) / samples)
    if exponent_base == "r":
        scale = 1.0 / math.gamma(float(e.sum()))
        return p * scale, se * scale
    return p, se


def _jacobi01(n: int, left: float, right: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [0, 1] for weight ``x**left * (1-x)**right``."""
    y, wy = roots_jacobi(n, right, left)
    x = 0.5 * (y + 1.0)
    return x, wy / 2.0 ** (left + right + 1.0)


def diagonal_moment_integral(t: float, a: float, nodes: int = 64) -> float:
    """The triple integral ``I(t, a)`` for ``0 < t <= 1/2``, ``b = 1 - a``.

    After scaling ``w = t x``, ``v = (t - w) s``, ``u = w q``, the three
    power singularities become Gauss-Jacobi weights in ``x``, ``s``, ``q``
    and the remaining factor ``(1 - w - v - u)**(a*a - 1)`` is smooth for
    ``t < 1/2``.
    """
    if not 0.0 < t <= 0.5:
        raise ValueError(f"t must lie in (0, 1/2], got {t}")
    if not 0.0 < a < 1.0:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    b = 1.0 - a
    ab, bb, aa = a * b, b * b, a * a
    x, wx = _jacobi01(nodes, 2 * ab - 1.0, bb)
    s, ws = _jacobi01(nodes, bb - 1.0, 0.0)
    q, wq = _jacobi01(nodes, ab - 1.0, 0.0)
    w = t * x[:, None, None]
    v = (t - w) * s[None, :, None]
    u = w * q[None, None, :]
    rest = (1.0 - w - v - u) ** (aa - 1.0)
    total = np.einsum("i,j,k,ijk->", wx, ws, wq, rest)
    # jacobian t**(2ab) * t**(b^2) from the scalings of w and v
    total *= t ** (2 * ab + bb)
    log_norm = math.lgamma(aa) + math.lgamma(bb) + 2 * math.lgamma(ab)
    return 2.0 * total * math.exp(-log_norm)


def limit_second_moment_diagonal(theta: float, t: float, nodes: int = 64) -> float:
    """Limit of ``E X(t)**2`` by deterministic quadrature."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    p = theta / (1.0 + theta)
    if t <= 0.5:
        return diagonal_moment_integral(t, 1.0 - p, nodes)
    return (diagonal_moment_integral(1.0 - t, p, nodes)
            + 2.0 * regularized_incomplete_beta(t, p, 1.0 - p) - 1.0)
