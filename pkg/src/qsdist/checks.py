"""Named verification checks shared by `qsdist verify` and the tests.

Each check returns a :class:`CheckResult`; the exact ones are
deterministic identities, the statistical ones are seeded gates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import estimators, oracles
from .exact import (
    distance_sq_closed,
    distance_sq_closed_table,
    distance_sq_dnc_table,
    distance_sq_recursive,
    harmonic,
    harmonic2,
    limit_variance,
    mean_comparisons,
    split_toll_second_moment,
    split_toll_sum,
    split_toll_vector,
    sum_harmonic2,
    PiQuadratic,
)
from .rng import MASK64, ReplicationStream, derive
from .sim import split_identity_residual

EULER_GAMMA = 0.5772156649015328606


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: {status} ({self.detail})"


def route_equality(n_max: int = 2000) -> CheckResult:
    closed = distance_sq_closed_table(n_max)
    rec = distance_sq_recursive(n_max)
    dnc = distance_sq_dnc_table(n_max)
    bad = [
        n
        for n in range(n_max + 1)
        if not (closed[n] == rec[n] == dnc[n])
    ]
    return CheckResult(
        f"distance-sq three-route equality n <= {n_max}",
        not bad,
        f"first mismatch at n={bad[0]}" if bad else "exact component-wise equality",
    )


def spot_exact_values() -> CheckResult:
    sigma2 = limit_variance()
    ok = (
        distance_sq_closed(0) == sigma2
        and distance_sq_closed(1) == sigma2
        and distance_sq_closed(2) == sigma2
        and distance_sq_closed(3) == PiQuadratic(Fraction(503, 72), Fraction(-2, 3))
    )
    return CheckResult(
        "spot exact distance values (n = 0, 1, 2, 3)",
        ok,
        "a0=a1=a2=sigma^2, a3=503/72-(2/3)pi^2",
    )


def split_toll_zero_sum(n_max: int = 2000, literal_max: int = 120) -> CheckResult:
    for n in range(1, literal_max + 1):
        if sum(split_toll_vector(n), Fraction(0)) != 0:
            return CheckResult(
                f"split-toll zero sum n <= {n_max}", False, f"vector sum fails at n={n}"
            )
    for n in range(1, n_max + 1):
        if split_toll_sum(n) != 0:
            return CheckResult(
                f"split-toll zero sum n <= {n_max}", False, f"fails at n={n}"
            )
    return CheckResult(
        f"split-toll zero sum n <= {n_max}",
        True,
        f"exact zero (literal vector sum up to n={literal_max})",
    )


def split_toll_second_moment_identity(n_max: int = 200) -> CheckResult:
    for n in range(1, n_max + 1):
        direct = sum((c * c for c in split_toll_vector(n)), Fraction(0)) / n
        if direct != split_toll_second_moment(n):
            return CheckResult(
                f"split-toll second moment identity n <= {n_max}",
                False,
                f"fails at n={n}",
            )
    return CheckResult(
        f"split-toll second moment identity n <= {n_max}", True, "exact equality"
    )


def harmonic2_partial_sum(n_max: int = 400) -> CheckResult:
    acc = Fraction(0)
    for n in range(n_max + 1):
        if n:
            acc += harmonic2(n)
        if sum_harmonic2(n) != acc:
            return CheckResult(
                f"second-order harmonic partial sums n <= {n_max}",
                False,
                f"fails at n={n}",
            )
    return CheckResult(
        f"second-order harmonic partial sums n <= {n_max}", True, "exact equality"
    )


def monotone_decay(n_max: int = 2000) -> CheckResult:
    vals = [float(a) for a in distance_sq_closed_table(n_max)]
    positive = all(v > 0.0 for v in vals)
    decreasing = all(vals[n + 1] < vals[n] for n in range(2, n_max))
    return CheckResult(
        f"distance-sq positive and decreasing (2 <= n <= {n_max})",
        positive and decreasing,
        f"a_2000 = {vals[-1]:.6g}",
    )


def asymptotic_residual(n: int = 100_000, tol: float = 0.01) -> CheckResult:
    resid = n * float(distance_sq_closed(n)) - 2.0 * math.log(n)
    limit = 2.0 * EULER_GAMMA - 3.0
    gap = abs(resid - limit)
    return CheckResult(
        f"asymptotic residual at n = {n}",
        gap < tol,
        f"n*a^2 - 2 ln n = {resid:.6f}, limit {limit:.6f}, gap {gap:.2e}",
    )


def mean_comparisons_bruteforce_equality(n_max: int = 8) -> CheckResult:
    for n in range(n_max + 1):
        if oracles.mean_comparisons_bruteforce(n) != mean_comparisons(n):
            return CheckResult(
                f"mean comparisons brute force n <= {n_max}", False, f"fails at n={n}"
            )
    return CheckResult(
        f"mean comparisons brute force n <= {n_max}",
        True,
        "enumerated averages equal 2(n+1)H_n - 4n",
    )


def quadrature_grid() -> CheckResult:
    worst = 0.0
    for n in (1, 2, 5, 10, 20, 40):
        for k in {1, n, (n + 1) // 2}:
            res = oracles.beta_log_quadrature(n, k)
            target = float(harmonic(k - 1) - harmonic(n))
            gap = abs(res.value - target)
            if gap > max(1e-9, res.error_estimate):
                return CheckResult(
                    "log-beta quadrature grid",
                    False,
                    f"(n={n}, k={k}) off by {gap:.2e}",
                )
            worst = max(worst, gap)
    return CheckResult("log-beta quadrature grid", True, f"worst gap {worst:.2e}")


def toll_sq_quadrature_check(tol: float = 1e-10) -> CheckResult:
    res = oracles.toll_sq_quadrature()
    target = float(limit_variance()) / 3.0
    gap = abs(res.value - target)
    return CheckResult(
        "squared-toll integral vs sigma^2/3",
        gap < tol,
        f"gap {gap:.2e} in {res.evaluations} evaluations",
    )


def split_identity_residuals(
    pairs: int = 1000, n_max: int = 500, seed: int = 0, tol: float = 1e-12
) -> CheckResult:
    worst = 0.0
    master = derive(seed & MASK64, 0x51D)
    for i in range(pairs):
        pick = ReplicationStream(master, 2 * i)
        n = 1 + int(pick.key(0) * n_max)
        resid = split_identity_residual(n, ReplicationStream(master, 2 * i + 1))
        worst = max(worst, resid)
        if resid >= tol:
            return CheckResult(
                "pathwise split-identity residual",
                False,
                f"residual {resid:.2e} at n={n}",
            )
    return CheckResult(
        "pathwise split-identity residual",
        True,
        f"{pairs} trees (n <= {n_max}), worst {worst:.2e}",
    )


def prune_variance_decay(seed: int = 0, reps: int = 3000) -> CheckResult:
    """Nested prunings: refining eps only adds centered terms, so the
    difference of two evaluations on one key stream has second moment
    at most sigma^2 * (coarser eps)."""
    from . import kernels

    sigma2 = float(limit_variance())
    master = np.uint64(derive(seed & MASK64, 0xDEC))
    ladder = [2.0**-4, 2.0**-8, 2.0**-12]
    details = []
    for coarse, fine in zip(ladder, ladder[1:]):
        y_coarse, _, _ = kernels.limit_bulk(coarse, np.int64(reps), master)
        y_fine, _, _ = kernels.limit_bulk(fine, np.int64(reps), master)
        d = y_fine - y_coarse
        second = float(np.sum(d * d) / reps)
        se = float(np.std(d * d, ddof=1) / math.sqrt(reps))
        bound = sigma2 * coarse
        details.append(f"eps={coarse:g}: {second:.4g} <= {bound:.4g}")
        if second > bound + 4.0 * se:
            return CheckResult(
                "nested-pruning difference variance",
                False,
                f"E(diff^2)={second:.4g} exceeds sigma^2*eps={bound:.4g}",
            )
    return CheckResult(
        "nested-pruning difference variance", True, "; ".join(details)
    )


def exact_checks() -> list[CheckResult]:
    return [
        route_equality(),
        spot_exact_values(),
        split_toll_zero_sum(),
        split_toll_second_moment_identity(),
        harmonic2_partial_sum(),
        monotone_decay(),
    ]


def oracle_checks(seed: int = 0) -> list[CheckResult]:
    out = [
        mean_comparisons_bruteforce_equality(),
        quadrature_grid(),
        toll_sq_quadrature_check(),
    ]
    for n in (1, 2, 3, 50):
        rep = oracles.split_toll_product_check(n, reps=200_000, seed=seed)
        out.append(
            CheckResult(
                f"split-toll/toll product identity (n={n})",
                bool(rep.passed),
                f"estimate {rep.estimate:.6g}, target {rep.target:.6g}, z={rep.z:+.2f}",
            )
        )
    return out


def monte_carlo_checks(seed: int = 0) -> list[CheckResult]:
    """Seeded statistical gates at verification-suite default parameters
    (sized for minutes, not the full acceptance workload)."""
    out = [split_identity_residuals(seed=seed), prune_variance_decay(seed=seed)]

    run = estimators.run_coupled(64, 1e-4, 50_000, seed=derive(seed, 0xC0))
    for rep in (
        estimators.estimate_distance_sq(64, 1e-4, 50_000, run=run),
        estimators.estimate_w1_sq(64, 1e-4, 50_000, run=run),
        estimators.w3_report_from_run(run),
        estimators.cross_term_report(run),
        estimators.decomposition_report(run),
    ):
        out.append(_report_check(rep))

    mean_rep, second_rep = estimators.estimate_limit_moments(
        1e-4, 50_000, seed=derive(seed, 0xC1)
    )
    out.append(_report_check(mean_rep))
    out.append(_report_check(second_rep))

    for rep in estimators.level_variance_profile(10, 5000, seed=derive(seed, 0xC2)):
        out.append(_report_check(rep))

    d2_rep = estimators.estimate_d2(100, 1e-4, 20_000, seed=derive(seed, 0xC3))
    out.append(
        CheckResult(
            "quantile-distance bounds (n=100)",
            bool(d2_rep.passed),
            f"estimate {d2_rep.estimate:.4f} < {d2_rep.extra['upper_bound']:.4f} "
            f"and <= coupled {d2_rep.extra['coupled_l2']:.4f}",
        )
    )
    return out


def _report_check(rep: estimators.EstimateReport) -> CheckResult:
    where = f" (n={rep.n})" if rep.n is not None else ""
    z = f", z={rep.z:+.2f}" if rep.z is not None else ""
    target = f", target {rep.target:.6g}" if rep.target is not None else ""
    return CheckResult(
        f"gate {rep.quantity}{where}",
        bool(rep.passed),
        f"estimate {rep.estimate:.6g}{target}{z}",
    )
