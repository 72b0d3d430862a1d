"""Independent oracles: brute-force enumeration and quadrature.

Nothing here shares a code path with the closed forms in
:mod:`qsdist.exact`; these are the referees. The mean comparison count
is recomputed by enumerating every rank order; the log-beta integral
and the squared-toll integral are done by adaptive quadrature; the
split-toll/toll product identity is checked by Monte Carlo with the
conditional pivot drawn as an order statistic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from math import exp, factorial, log

import numpy as np
from scipy.integrate import quad

from .errors import ResourceRefusal
from .estimators import EstimateReport, _gated_report
from .exact import split_toll_float_vector, split_toll_second_moment
from .rng import MASK64, data_keys_vec, derive_vec, mix64_vec, rep_keys_vec, u01_vec

MAX_BRUTEFORCE = 9  # n! rank orders are enumerated


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


def quicksort_comparisons(xs) -> int:
    """Comparison count of first-element-pivot quicksort on a sequence.

    Straightforward sublist partitioning, kept deliberately independent
    of the search-tree simulation it cross-checks.
    """
    count = 0
    stack = [list(xs)]
    while stack:
        seg = stack.pop()
        if len(seg) < 2:
            continue
        pivot = seg[0]
        count += len(seg) - 1
        stack.append([x for x in seg[1:] if x < pivot])
        stack.append([x for x in seg[1:] if x > pivot])
    return count


def mean_comparisons_bruteforce(n: int) -> Fraction:
    """Exact average comparison count over all n! rank orders.

    Enumerates permutations lazily in lexicographic order; refuses
    n > 9.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > MAX_BRUTEFORCE:
        raise ResourceRefusal(
            f"brute force over {n}! rank orders refused (cap {MAX_BRUTEFORCE})"
        )
    if n < 2:
        return Fraction(0)
    total = 0
    for perm in permutations(range(n)):
        total += quicksort_comparisons(perm)
    return Fraction(total, factorial(n))


_SPLIT_AT = 1e-3  # integrable ln singularity at 0; substitute t=e^-u left of this


def beta_log_quadrature(n: int, k: int) -> QuadratureResult:
    """Adaptive quadrature of the normalized log-beta integral

        (1/B(k, n-k+1)) * int_0^1 t^(k-1) (1-t)^(n-k) ln(t) dt

    whose closed form is H_{k-1} - H_n. The left piece uses t = e^-u,
    turning the endpoint singularity into a smooth decaying integrand.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if n > 40:
        raise ValueError("n > 40 concentrates the beta weight too sharply")

    def right(t: float) -> float:
        return t ** (k - 1) * (1.0 - t) ** (n - k) * log(t)

    def left(u: float) -> float:
        # t = e^-u, dt = -e^-u du; integrand t^(k-1) (1-t)^(n-k) ln t
        return -u * exp(-k * u) * (1.0 - exp(-u)) ** (n - k)

    i_right, e_right, info_r = quad(
        right, _SPLIT_AT, 1.0, limit=200, epsabs=1e-13, epsrel=1e-12, full_output=1
    )[:3]
    i_left, e_left, info_l = quad(
        left, log(1.0 / _SPLIT_AT), np.inf, limit=200, epsabs=1e-14, full_output=1
    )[:3]
    beta = Fraction(factorial(k - 1) * factorial(n - k), factorial(n))
    scale = 1.0 / float(beta)
    return QuadratureResult(
        value=(i_left + i_right) * scale,
        error_estimate=(e_left + e_right) * scale,
        evaluations=int(info_r["neval"]) + int(info_l["neval"]),
    )


def toll_sq_quadrature() -> QuadratureResult:
    """Quadrature of int_0^1 C(t)^2 dt; must equal sigma^2 / 3.

    The integrand is bounded (C -> 1 at both endpoints); only its
    derivative is singular, which adaptive quadrature handles.
    """

    def f(t: float) -> float:
        c = 1.0 + 2.0 * t * log(t) + 2.0 * (1.0 - t) * log(1.0 - t)
        return c * c

    value, err, info = quad(
        f, 0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-13, full_output=1
    )[:3]
    return QuadratureResult(value=value, error_estimate=err, evaluations=int(info["neval"]))


def split_toll_product_check(
    n: int, reps: int = 200_000, seed: int = 0, chunk: int = 1 << 14
) -> EstimateReport:
    """Monte Carlo of split_toll(n, nu0+1) * C(U) against the identity
    target (n/(n+1)) * split_toll_second_moment(n).

    nu0 is uniform on {0..n-1}; conditionally on it, U is the
    (nu0+1)-th smallest of n fresh uniforms (the order-statistics route,
    which mirrors how the pivot arises probabilistically). The extra
    carries the conditional-mean diagnostic E[U | nu0] = (nu0+1)/(n+1).
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > 200:
        raise ValueError("product check capped at n = 200")
    if reps < 2:
        raise ValueError("need at least 2 replications")
    cn = split_toll_float_vector(n)
    samples = np.empty(reps)
    mean_gap = np.empty(reps)
    for start in range(0, reps, chunk):
        stop = min(start + chunk, reps)
        idx = np.arange(start, stop, dtype=np.uint64)
        rep_keys = rep_keys_vec(seed & MASK64, idx)
        r01 = u01_vec(mix64_vec(derive_vec(rep_keys, 0)))
        nu0 = np.minimum((r01 * n).astype(np.int64), n - 1)
        us = np.sort(data_keys_vec(derive_vec(rep_keys, 1), n), axis=1)
        u = us[np.arange(stop - start), nu0]
        c_u = 1.0 + 2.0 * u * np.log(u) + 2.0 * (1.0 - u) * np.log(1.0 - u)
        samples[start:stop] = cn[nu0] * c_u
        mean_gap[start:stop] = u - (nu0 + 1.0) / (n + 1.0)
    target = n / (n + 1.0) * float(split_toll_second_moment(n))
    gap_mean = float(np.sum(mean_gap) / reps)
    gap_se = float(np.std(mean_gap, ddof=1) / np.sqrt(reps))
    return _gated_report(
        "split_toll_times_toll",
        samples,
        target=target,
        budget=0.0,
        n=n,
        eps=None,
        seed=seed,
        extra={
            "conditional_mean_gap": gap_mean,
            "conditional_mean_gap_stderr": gap_se,
        },
    )
