"""Exact closed forms for QuickSort's comparison cost and its limit law.

Everything here lives in the two-dimensional value field Q + Q*pi^2,
represented by :class:`PiQuadratic` over :class:`fractions.Fraction`.
That closure is enough for every quantity we need: the limit variance
``7 - (2/3) pi^2``, the second moments of the coupling decomposition,
and the squared L2 distance ``distance_sq(n)`` between the normalized
cost of sorting ``n`` keys and its limit, which this module computes by
three independent routes:

* ``distance_sq_closed``    -- the closed form in harmonic numbers,
* ``distance_sq_recursive`` -- the one-level recursion built from the
  left-subtree and toll second moments,
* ``distance_sq_dnc``       -- the divide-and-conquer recurrence solved
  explicitly.

The three routes must agree *exactly* (component-wise Fraction
equality); the test suite enforces this over a large range of ``n``.

Infinite tails are never truncated numerically: ``sum_{k>n} 1/k^2`` is
carried exactly as ``pi^2/6 - H2(n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, log

import numpy as np

Rational = Fraction

# pi^2 to 54 significant digits; exact-to-float conversion goes through
# this Fraction so the double result is correctly rounded far beyond the
# documented 1e-12 relative guarantee.
PI_SQUARED = Fraction(
    9869604401089358618834490999876151135313699407240790626,
    10**54,
)


@dataclass(frozen=True)
class PiQuadratic:
    """Exact element ``rat + pi2 * pi^2`` of Q + Q*pi^2.

    Closed under addition, subtraction, and scaling by rationals; two
    values are equal iff both components are equal. The artifact never
    multiplies two PiQuadratic values, so that operation is not defined.
    """

    rat: Fraction
    pi2: Fraction

    @staticmethod
    def of(rat, pi2=0) -> "PiQuadratic":
        return PiQuadratic(Fraction(rat), Fraction(pi2))

    def __add__(self, other):
        if isinstance(other, PiQuadratic):
            return PiQuadratic(self.rat + other.rat, self.pi2 + other.pi2)
        if isinstance(other, (int, Fraction)):
            return PiQuadratic(self.rat + other, self.pi2)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PiQuadratic):
            return PiQuadratic(self.rat - other.rat, self.pi2 - other.pi2)
        if isinstance(other, (int, Fraction)):
            return PiQuadratic(self.rat - other, self.pi2)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return PiQuadratic(other - self.rat, -self.pi2)
        return NotImplemented

    def __neg__(self):
        return PiQuadratic(-self.rat, -self.pi2)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return PiQuadratic(self.rat * other, self.pi2 * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return PiQuadratic(self.rat / other, self.pi2 / other)
        return NotImplemented

    def __float__(self) -> float:
        return float(self.rat + self.pi2 * PI_SQUARED)

    def __str__(self) -> str:
        return f"{self.rat} + ({self.pi2})·pi^2"


def _harmonic_pair(n: int, power: int) -> tuple[int, int]:
    """(numerator, denominator) of sum_{j<=n} 1/j^power, denominator kept
    as a running lcm so the accumulation never needs a big-by-big gcd."""
    num, den = 0, 1
    for j in range(1, n + 1):
        jp = j**power
        g = gcd(den, jp)
        mult = jp // g
        num = num * mult + den // g
        den *= mult
    return num, den


def harmonic(n: int) -> Fraction:
    """n-th harmonic number H_n = sum_{j=1..n} 1/j, with H_0 = 0."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return Fraction(*_harmonic_pair(n, 1))


def harmonic2(n: int) -> Fraction:
    """Second-order harmonic number H2_n = sum_{j=1..n} 1/j^2."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return Fraction(*_harmonic_pair(n, 2))


def sum_harmonic2(n: int) -> Fraction:
    """sum_{j=1..n} H2_j, by the closed form (n+1)*H2_n - H_n."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return (n + 1) * harmonic2(n) - harmonic(n)


def mean_comparisons(n: int) -> Fraction:
    """Expected number of key comparisons to sort n iid keys:
    mu_n = 2(n+1)H_n - 4n."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return 2 * (n + 1) * harmonic(n) - 4 * n


@lru_cache(maxsize=None)
def mean_comparisons_float(n: int) -> float:
    """float(mean_comparisons(n)), converted once and cached."""
    return float(mean_comparisons(n))


# shared incremental tables: mu_k, their prefix sums, and H_k; grown on
# demand so sweeps over many n stay linear overall
_MU: list[Fraction] = [Fraction(0)]
_MU_PREFIX: list[Fraction] = [Fraction(0)]  # sum_{j<=k} mu_j
_H: list[Fraction] = [Fraction(0)]


def _mu_list(n: int) -> list[Fraction]:
    """mu_0 .. mu_n as exact Fractions (shared, incrementally grown)."""
    for k in range(len(_MU), n + 1):
        h = _H[-1] + Fraction(1, k)
        _H.append(h)
        mu_k = 2 * (k + 1) * h - 4 * k
        _MU.append(mu_k)
        _MU_PREFIX.append(_MU_PREFIX[-1] + mu_k)
    return _MU


def mean_comparisons_float_table(n: int) -> np.ndarray:
    """mu_0 .. mu_n as a float64 array (each entry correctly rounded)."""
    return np.array([float(m) for m in _mu_list(n)], dtype=np.float64)


def split_toll(n: int, i: int) -> Fraction:
    """Centered one-level cost of splitting n keys at pivot rank i:
    (n - 1 + mu_{i-1} + mu_{n-i} - mu_n) / n.

    Requires 1 <= i <= n; the values sum to zero over i.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 1 <= i <= n:
        raise ValueError(f"rank i={i} out of range [1, {n}]")
    mu = _mu_list(n)
    return (n - 1 + mu[i - 1] + mu[n - i] - mu[n]) / n


def split_toll_vector(n: int) -> list[Fraction]:
    """All of split_toll(n, 1..n) sharing one mu table."""
    if n < 1:
        raise ValueError("n must be positive")
    mu = _mu_list(n)
    base = n - 1 - mu[n]
    return [(base + mu[i - 1] + mu[n - i]) / n for i in range(1, n + 1)]


def split_toll_float_vector(n: int) -> np.ndarray:
    return np.array([float(c) for c in split_toll_vector(n)], dtype=np.float64)


def split_toll_sum(n: int) -> Fraction:
    """sum_i split_toll(n, i), via the exact regrouping
    (n(n-1) + 2 sum_{k<n} mu_k - n mu_n) / n.

    Same rational arithmetic as summing the vector term by term (a
    property test checks that), but O(1) big-rational operations.
    """
    mu = _mu_list(n)
    return (Fraction(n * (n - 1)) + 2 * sum(mu[:n]) - n * mu[n]) / n


def toll(x: float) -> float:
    """Limit toll C(x) = 1 + 2x ln x + 2(1-x) ln(1-x) on [0, 1].

    The endpoint convention x ln x -> 0 gives C(0) = C(1) = 1.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"toll argument {x!r} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 1.0
    return 1.0 + 2.0 * x * log(x) + 2.0 * (1.0 - x) * log(1.0 - x)


def limit_variance() -> PiQuadratic:
    """Second moment of the limit cost: 7 - (2/3) pi^2 (~ 0.4202637)."""
    return PiQuadratic(Fraction(7), Fraction(-2, 3))


def w1_second_moment(n: int, prefix: PiQuadratic) -> PiQuadratic:
    """E W1^2 for the subtree-coupling mismatch at size n.

    ``prefix`` must equal sum_{k=0..n-1} (k+1)^2 * distance_sq(k); the
    result is prefix / (n (n+1)^2) + sigma^2 / (6 (n+1)).
    """
    if n < 1:
        raise ValueError("n must be positive")
    return prefix * Fraction(1, n * (n + 1) ** 2) + limit_variance() * Fraction(
        1, 6 * (n + 1)
    )


def w3_second_moment(n: int) -> PiQuadratic:
    """E W3^2: the toll mismatch second moment b_n^2.

    Equals -(2/9) pi^2 + (4/3)((n+2)/(n+1)) H2_n + 4 H_n / (3 n (n+1)^2).
    """
    if n < 1:
        raise ValueError("n must be positive (the toll mismatch needs a split)")
    rat = Fraction(4, 3) * Fraction(n + 2, n + 1) * harmonic2(n) + Fraction(
        4, 3
    ) * harmonic(n) / (n * (n + 1) ** 2)
    return PiQuadratic(rat, Fraction(-2, 9))


def split_toll_second_moment(n: int) -> Fraction:
    """E[split_toll(n, nu0+1)^2] for a uniform split rank; closed form
    (7/3)(1+1/n)^2 - (4/3)(1+2/n)(1+1/n) H2_n - (4/3) n^-3 H_n.

    Equals (1/n) sum_i split_toll(n, i)^2, which a test verifies directly.
    """
    if n < 1:
        raise ValueError("n must be positive")
    one = Fraction(1)
    return (
        Fraction(7, 3) * (one + Fraction(1, n)) ** 2
        - Fraction(4, 3) * (one + Fraction(2, n)) * (one + Fraction(1, n)) * harmonic2(n)
        - Fraction(4, 3) * harmonic(n) / n**3
    )


def distance_sq_closed(n: int) -> PiQuadratic:
    """Squared L2 distance between the normalized cost at n keys and the
    limit, in closed form:

        (2 H_n + 1 + 6/(n+1)) / (n+1) - 4 (pi^2/6 - H2_n).

    The infinite tail sum_{k>n} 1/k^2 is kept exactly as pi^2/6 - H2_n,
    so the pi^2 component is always -2/3.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    rat = (2 * harmonic(n) + 1 + Fraction(6, n + 1)) / (n + 1) + 4 * harmonic2(n)
    return PiQuadratic(rat, Fraction(-2, 3))


def distance_sq_closed_table(n_max: int) -> list[PiQuadratic]:
    """distance_sq_closed(0..n_max) with incremental harmonic updates,
    so a full sweep is linear instead of quadratic."""
    h = Fraction(0)
    h2 = Fraction(0)
    out = [limit_variance()]
    for n in range(1, n_max + 1):
        h += Fraction(1, n)
        h2 += Fraction(1, n * n)
        rat = (2 * h + 1 + Fraction(6, n + 1)) / (n + 1) + 4 * h2
        out.append(PiQuadratic(rat, Fraction(-2, 3)))
    return out


def distance_sq_recursive(n_max: int) -> list[PiQuadratic]:
    """distance_sq(0..n_max) by the one-level recursion
    a_n = 2 * w1_second_moment(n) + w3_second_moment(n), a_0 = sigma^2.

    The prefix sum sum (k+1)^2 a_k is maintained incrementally, so the
    whole table costs O(n_max) rational operations.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    sigma2 = limit_variance()
    out = [sigma2]
    prefix = sigma2  # (0+1)^2 * a_0
    h = Fraction(0)
    h2 = Fraction(0)
    for n in range(1, n_max + 1):
        h += Fraction(1, n)
        h2 += Fraction(1, n * n)
        ew1 = prefix * Fraction(1, n * (n + 1) ** 2) + sigma2 * Fraction(1, 6 * (n + 1))
        b_rat = Fraction(4, 3) * Fraction(n + 2, n + 1) * h2 + Fraction(4, 3) * h / (
            n * (n + 1) ** 2
        )
        a_n = 2 * ew1 + PiQuadratic(b_rat, Fraction(-2, 9))
        out.append(a_n)
        prefix = prefix + a_n * ((n + 1) ** 2)
    return out


def _dnc_toll(n: int, h: Fraction, h2: Fraction) -> PiQuadratic:
    """c_n of the divide-and-conquer recurrence for x_n = (n+1)^2 a_n^2."""
    rat = (
        Fraction(7, 3) * (n + 2) * (n + 1)
        - Fraction(7, 3) * (n + 1) ** 2
        + Fraction(4, 3) * (n + 2) * (n + 1) * h2
        + Fraction(4, 3) * h / n
    )
    # sigma^2/3 * (n+2)(n+1) contributes 7/3*(n+2)(n+1) above and the pi^2 part here
    return PiQuadratic(rat, Fraction(-2, 9) * (n + 2) * (n + 1))


def distance_sq_dnc(n: int) -> PiQuadratic:
    """distance_sq(n) via the divide-and-conquer recurrence
    x_n = (2/n) sum_{k<n} x_k + c_n solved as
    x_n = (n+1) [sigma^2 + sum_{k=1..n} (k c_k - (k-1) c_{k-1}) / (k(k+1))],
    returning x_n / (n+1)^2."""
    return distance_sq_dnc_table(n)[n]


def distance_sq_dnc_table(n_max: int) -> list[PiQuadratic]:
    """distance_sq_dnc(0..n_max) sharing the telescoping partial sum."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    sigma2 = limit_variance()
    out = [sigma2]
    h = Fraction(0)
    h2 = Fraction(0)
    acc = PiQuadratic.of(0)
    prev_c = PiQuadratic.of(0)  # (k-1) c_{k-1} term is zero at k=1
    for k in range(1, n_max + 1):
        h += Fraction(1, k)
        h2 += Fraction(1, k * k)
        c_k = _dnc_toll(k, h, h2)
        acc = acc + (c_k * k - prev_c * (k - 1)) / Fraction(k * (k + 1))
        x_k = (sigma2 + acc) * (k + 1)
        out.append(x_k / Fraction((k + 1) ** 2))
        prev_c = c_k
    return out
