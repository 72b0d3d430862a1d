"""Seeded Monte Carlo engine confronting simulation with the exact core.

Every estimator is a pure function of its parameters and master seed:
replication r draws from a counter-keyed stream derived from (seed, r),
results land in per-replication slots, and reductions use numpy's
pairwise summation — so reports are bit-identical regardless of worker
count or scheduling. The worker count can be overridden with the
``QSDIST_WORKERS`` environment variable.

Gates are 4 standard errors wide (false-alarm ~6e-5 per gate under
normality) plus the documented truncation-bias budget: pruning the
limit series at width eps can only lower second moments, by at most
``sigma^2 * eps`` (scaled by E[U^2] <= 1/3 for the one-subtree
mismatch), and shifts the quantile distance by at most
``sqrt(sigma^2 * eps)``.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as scipy_stats

from .errors import ResourceRefusal
from .exact import (
    PiQuadratic,
    distance_sq_closed,
    distance_sq_recursive,
    limit_variance,
    mean_comparisons_float_table,
    split_toll_float_vector,
    w1_second_moment,
    w3_second_moment,
)
from .rng import DEFAULT_SEED, MASK64, data_keys_vec, derive, derive_vec, mix64_vec, rep_keys_vec, u01_vec

# expected node count metric reps/eps; the default allows the heaviest
# documented verification run (2e5 reps at eps=1e-6 -> 2e11) with room
DEFAULT_NODE_BUDGET = 1.0e12

SIGMA_SQ_FLOAT = float(limit_variance())


@dataclass
class EstimateReport:
    """One Monte Carlo verdict: estimate vs exact target with a gate."""

    quantity: str
    n: Optional[int]
    eps: Optional[float]
    reps: int
    seed: int
    estimate: float
    stderr: float
    target: Optional[float]
    z: Optional[float]
    bias_budget: float
    passed: Optional[bool]
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _configure_threads() -> None:
    w = os.environ.get("QSDIST_WORKERS")
    if w:
        import numba

        numba.set_num_threads(max(1, int(w)))


def _require_budget(reps: int, eps: float, node_budget: float) -> None:
    expected = reps / eps
    if expected > node_budget:
        raise ResourceRefusal(
            f"expected node count reps/eps = {expected:.3g} exceeds the "
            f"configured budget {node_budget:.3g}"
        )


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    r = x.size
    if r < 2:
        raise ValueError("need at least 2 replications for a standard error")
    mean = float(np.sum(x) / r)
    var = float(np.sum((x - mean) ** 2) / (r - 1))
    return mean, math.sqrt(var / r)


def _gated_report(
    quantity: str,
    samples: np.ndarray,
    target: Optional[float],
    budget: float,
    *,
    n: Optional[int],
    eps: Optional[float],
    seed: int,
    gate_mult: float = 4.0,
    extra: Optional[dict] = None,
) -> EstimateReport:
    est, se = _mean_stderr(samples)
    z = None if target is None else (est - target) / se
    passed = None
    if target is not None:
        passed = abs(est - target) <= gate_mult * se + budget
    return EstimateReport(
        quantity=quantity,
        n=n,
        eps=eps,
        reps=samples.size,
        seed=seed,
        estimate=est,
        stderr=se,
        target=target,
        z=z,
        bias_budget=budget,
        passed=passed,
        extra=extra or {},
    )


@dataclass
class CoupledRun:
    """Per-replication coupled statistics shared by several reports."""

    n: int
    eps: float
    reps: int
    seed: int
    y_n: np.ndarray
    y_limit: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    nu0: np.ndarray
    kn: np.ndarray
    nodes_visited: int


def run_coupled(
    n: int,
    eps: float,
    reps: int,
    seed: int = DEFAULT_SEED,
    node_budget: float = DEFAULT_NODE_BUDGET,
) -> CoupledRun:
    """Run the bulk coupled kernel; derived statistics mirror
    sim.coupled_sample elementwise."""
    if n < 1:
        raise ValueError("n must be positive")
    if reps < 2:
        raise ValueError("need at least 2 replications")
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"prune width eps={eps!r} outside (0, 1]")
    _require_budget(reps, eps, node_budget)
    _configure_threads()
    from . import kernels

    kn, nu0, kl, kr, v, g, s0, s1, nodes, err = kernels.coupled_bulk(
        n, eps, np.int64(reps), np.uint64(seed & MASK64)
    )
    if err.any():
        raise RuntimeError("tree walk exceeded its stack capacity")
    mu = mean_comparisons_float_table(n)
    cn = split_toll_float_vector(n)
    nu1 = (n - 1) - nu0
    y_n = (kn - mu[n]) / (n + 1.0)
    y_n0 = (kl - mu[nu0]) / (nu0 + 1.0)
    y_n1 = (kr - mu[nu1]) / (nu1 + 1.0)
    w1 = ((nu0 + 1.0) / (n + 1.0)) * y_n0 - s0
    w2 = ((nu1 + 1.0) / (n + 1.0)) * y_n1 - s1
    w3 = (n / (n + 1.0)) * cn[nu0] - g
    return CoupledRun(
        n=n,
        eps=eps,
        reps=reps,
        seed=seed,
        y_n=y_n,
        y_limit=g + s0 + s1,
        w1=w1,
        w2=w2,
        w3=w3,
        nu0=nu0,
        kn=kn,
        nodes_visited=int(nodes.sum()),
    )


def estimate_distance_sq(
    n: int,
    eps: float,
    reps: int,
    seed: int = DEFAULT_SEED,
    node_budget: float = DEFAULT_NODE_BUDGET,
    run: Optional[CoupledRun] = None,
) -> EstimateReport:
    """Mean of (y_n - y_limit)^2 over coupled replications, gated
    against the exact closed form within 4 stderr + sigma^2 * eps."""
    if reps < 100:
        raise ValueError("distance estimation needs at least 100 replications")
    if run is None:
        run = run_coupled(n, eps, reps, seed, node_budget)
    d = run.y_n - run.y_limit
    return _gated_report(
        "distance_sq",
        d * d,
        target=float(distance_sq_closed(n)),
        budget=SIGMA_SQ_FLOAT * eps,
        n=n,
        eps=eps,
        seed=run.seed,
    )


def estimate_limit_moments(
    eps: float,
    reps: int,
    seed: int = DEFAULT_SEED,
    node_budget: float = DEFAULT_NODE_BUDGET,
) -> tuple[EstimateReport, EstimateReport]:
    """(mean, second moment) of the pruned pure limit samples.

    Targets are 0 and sigma^2; the third central moment (a positive-skew
    diagnostic, not a gate) rides along in the second report's extra.
    """
    if reps < 100:
        raise ValueError("moment estimation needs at least 100 replications")
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"prune width eps={eps!r} outside (0, 1]")
    _require_budget(reps, eps, node_budget)
    _configure_threads()
    from . import kernels

    y, nodes, err = kernels.limit_bulk(eps, np.int64(reps), np.uint64(seed & MASK64))
    if err.any():
        raise RuntimeError("tree walk exceeded its stack capacity")
    mean_rep = _gated_report(
        "limit_mean",
        y,
        target=0.0,
        budget=math.sqrt(SIGMA_SQ_FLOAT * eps),
        n=None,
        eps=eps,
        seed=seed,
    )
    m = float(np.sum(y) / reps)
    third = float(np.sum((y - m) ** 3) / reps)
    second_rep = _gated_report(
        "limit_second_moment",
        y * y,
        target=SIGMA_SQ_FLOAT,
        budget=SIGMA_SQ_FLOAT * eps,
        n=None,
        eps=eps,
        seed=seed,
        extra={"third_central_moment": third},
    )
    return mean_rep, second_rep


def estimate_w3_sq(
    n: int, reps: int, seed: int = DEFAULT_SEED, chunk: int = 1 << 15
) -> EstimateReport:
    """Mean of w3^2 simulated directly (first key + split count), with
    no series truncation; the gate is purely statistical.

    The extra carries a chi-square uniformity diagnostic for the split
    count nu0 on {0..n-1}.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if reps < 2:
        raise ValueError("need at least 2 replications")
    cn = split_toll_float_vector(n)
    factor = n / (n + 1.0)
    samples = np.empty(reps)
    counts = np.zeros(n, dtype=np.int64)
    for start in range(0, reps, chunk):
        stop = min(start + chunk, reps)
        idx = np.arange(start, stop, dtype=np.uint64)
        keys_keys = derive_vec(rep_keys_vec(seed, idx), 0)
        u = data_keys_vec(keys_keys, n)
        u0 = u[:, 0]
        nu0 = np.sum(u[:, 1:] < u0[:, None], axis=1) if n > 1 else np.zeros(
            stop - start, dtype=np.int64
        )
        counts += np.bincount(nu0, minlength=n)
        c_u = 1.0 + 2.0 * u0 * np.log(u0) + 2.0 * (1.0 - u0) * np.log(1.0 - u0)
        w3 = factor * cn[nu0] - c_u
        samples[start:stop] = w3 * w3
    expected = reps / n
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    pval = float(scipy_stats.chi2.sf(chi2, df=n - 1)) if n > 1 else 1.0
    return _gated_report(
        "w3_sq",
        samples,
        target=float(w3_second_moment(n)),
        budget=0.0,
        n=n,
        eps=None,
        seed=seed,
        extra={"nu0_chi2": chi2, "nu0_chi2_dof": n - 1, "nu0_chi2_pvalue": pval},
    )


def _w1_target(n: int) -> float:
    table = distance_sq_recursive(n - 1)
    prefix = PiQuadratic.of(0)
    for k, a in enumerate(table):
        prefix = prefix + a * ((k + 1) ** 2)
    return float(w1_second_moment(n, prefix))


def estimate_w1_sq(
    n: int,
    eps: float,
    reps: int,
    seed: int = DEFAULT_SEED,
    node_budget: float = DEFAULT_NODE_BUDGET,
    run: Optional[CoupledRun] = None,
) -> EstimateReport:
    """Mean of w1^2 from coupled replications; the truncation budget is
    scaled by E[U^2] <= 1/3 because only the left subtree is pruned."""
    if reps < 100:
        raise ValueError("moment estimation needs at least 100 replications")
    if run is None:
        run = run_coupled(n, eps, reps, seed, node_budget)
    return _gated_report(
        "w1_sq",
        run.w1 * run.w1,
        target=_w1_target(n),
        budget=SIGMA_SQ_FLOAT * eps / 3.0,
        n=n,
        eps=eps,
        seed=run.seed,
    )


def w3_report_from_run(run: CoupledRun) -> EstimateReport:
    """w3^2 gate from an existing coupled run (w3 involves no pruning,
    so the gate is purely statistical, same as estimate_w3_sq)."""
    return _gated_report(
        "w3_sq",
        run.w3 * run.w3,
        target=float(w3_second_moment(run.n)),
        budget=0.0,
        n=run.n,
        eps=run.eps,
        seed=run.seed,
    )


def cross_term_report(run: CoupledRun) -> EstimateReport:
    """Mean of w1*w2: zero in expectation (and the pruned tails are
    conditionally independent and centered, so no truncation budget)."""
    return _gated_report(
        "w1w2_mean",
        run.w1 * run.w2,
        target=0.0,
        budget=0.0,
        n=run.n,
        eps=run.eps,
        seed=run.seed,
    )


def decomposition_report(run: CoupledRun) -> EstimateReport:
    """Mean of 2 w1^2 + w3^2 - (y_n - y_limit)^2, which is zero in
    expectation; truncation can contribute at most 2 sigma^2 eps."""
    d = run.y_n - run.y_limit
    resid = 2.0 * run.w1 * run.w1 + run.w3 * run.w3 - d * d
    return _gated_report(
        "decomposition_residual",
        resid,
        target=0.0,
        budget=2.0 * SIGMA_SQ_FLOAT * run.eps,
        n=run.n,
        eps=run.eps,
        seed=run.seed,
    )


def estimate_d2(
    n: int,
    eps: float,
    m: int,
    seed: int = DEFAULT_SEED,
    node_budget: float = DEFAULT_NODE_BUDGET,
    batches: int = 20,
) -> EstimateReport:
    """Quantile-coupling estimate of the minimal-L2 distance between the
    size-n cost law and the limit law, from two *independent* samples
    (coupling the recursion would bias the distributional distance).

    The point estimate pairs the full sorted samples; the standard
    error comes from independent batch estimates (conservative for the
    full-sample estimator). Two bound checks ride in extra: the
    theoretical upper bound 2/sqrt(n), and domination by the coupled
    L2 distance sqrt(distance_sq_closed(n)); both get 4 stderr plus the
    sqrt(sigma^2 eps) truncation allowance.
    """
    if m < 10**4:
        raise ValueError("quantile distance needs at least 1e4 samples per law")
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"prune width eps={eps!r} outside (0, 1]")
    _require_budget(m, eps, node_budget)
    _configure_threads()
    from . import kernels

    master_costs = derive(seed & MASK64, 0xD2A)
    master_limit = derive(seed & MASK64, 0xD2B)
    kn = kernels.quicksort_bulk(n, np.int64(m), np.uint64(master_costs))
    mu = mean_comparisons_float_table(n)
    y_n_raw = (kn - mu[n]) / (n + 1.0)
    y_raw, _, err = kernels.limit_bulk(eps, np.int64(m), np.uint64(master_limit))
    if err.any():
        raise RuntimeError("tree walk exceeded its stack capacity")
    est = math.sqrt(float(np.sum((np.sort(y_n_raw) - np.sort(y_raw)) ** 2) / m))

    size = m // batches
    batch_est = np.empty(batches)
    for b in range(batches):
        lo, hi = b * size, (b + 1) * size
        diff = np.sort(y_n_raw[lo:hi]) - np.sort(y_raw[lo:hi])
        batch_est[b] = math.sqrt(float(np.sum(diff**2) / size))
    se = float(np.std(batch_est, ddof=1) / math.sqrt(batches))

    budget = math.sqrt(SIGMA_SQ_FLOAT * eps)
    upper = 2.0 / math.sqrt(n)
    coupled = math.sqrt(float(distance_sq_closed(n)))
    passed_upper = est < upper + 4.0 * se + budget
    passed_coupled = est <= coupled + 4.0 * se + budget
    return EstimateReport(
        quantity="d2",
        n=n,
        eps=eps,
        reps=m,
        seed=seed,
        estimate=est,
        stderr=se,
        target=None,
        z=None,
        bias_budget=budget,
        passed=bool(passed_upper and passed_coupled),
        extra={
            "upper_bound": upper,
            "passed_upper": bool(passed_upper),
            "coupled_l2": coupled,
            "passed_coupled": bool(passed_coupled),
            "batch_count": batches,
        },
    )


def level_variance_profile(
    j_max: int, reps: int, seed: int = DEFAULT_SEED, chunk: int = 1024
) -> list[EstimateReport]:
    """Empirical second moments of the per-level series sums against the
    exact targets (sigma^2/3) (2/3)^j.

    Level sums involve no pruning, so there is no bias budget; the gate
    is 5 stderr because the fourth moments of deep level sums make the
    normalized error heavier-tailed at moderate replication counts.
    """
    if j_max < 0:
        raise ValueError("j_max must be non-negative")
    if j_max > 12:
        raise ResourceRefusal(f"level profile depth {j_max} exceeds the cap 12")
    if reps < 10**3:
        raise ValueError("level profile needs at least 1e3 replications")
    sums = np.empty((reps, j_max + 1))
    for start in range(0, reps, chunk):
        stop = min(start + chunk, reps)
        idx = np.arange(start, stop, dtype=np.uint64)
        keys = derive_vec(rep_keys_vec(seed, idx), 1)[:, None]
        widths = np.ones((stop - start, 1))
        for j in range(j_max + 1):
            u = u01_vec(mix64_vec(keys))
            g = widths * (
                1.0 + 2.0 * u * np.log(u) + 2.0 * (1.0 - u) * np.log(1.0 - u)
            )
            sums[start:stop, j] = g.sum(axis=1)
            if j < j_max:
                w0 = widths * u
                nxt = np.empty((stop - start, widths.shape[1] * 2))
                nxt[:, 0::2] = w0
                nxt[:, 1::2] = widths - w0
                widths = nxt
                kk = np.empty_like(nxt, dtype=np.uint64)
                kk[:, 0::2] = keys + keys + np.uint64(1)
                kk[:, 1::2] = keys + keys + np.uint64(2)
                keys = kk
    third = 2.0 / 3.0
    reports = []
    for j in range(j_max + 1):
        target = SIGMA_SQ_FLOAT / 3.0 * third**j
        reports.append(
            _gated_report(
                f"level_sum_sq_j{j}",
                sums[:, j] ** 2,
                target=target,
                budget=0.0,
                n=None,
                eps=None,
                seed=seed,
                gate_mult=5.0,
                extra={"level": j},
            )
        )
    return reports
