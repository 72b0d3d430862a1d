"""Batch command line: exact tables, simulations, and verification.

Subcommands
-----------
table     exact per-n rows (harmonic numbers, mean cost, distance-sq
          exact and float, toll second moment, asymptote, residual)
simulate  coupled Monte Carlo gates for one (n, eps, reps) setting
verify    named check suite: quick = exact identities (seconds),
          full = identities + oracles + statistical gates (minutes)
oracle    brute-force and quadrature oracles only
d2        quantile-coupling distance with its two bound checks

Exit codes: 0 all gates passed, 1 gate failure, 2 usage error,
3 resource refusal. Output is CSV (RFC-4180 quoting) or JSON lines;
exact values are serialized as strings like "503/72 + (-2/3)·pi^2",
never as floats. The default master seed is 0x5EEDC0DE20120126; bare
invocations are therefore reproducible, and byte-identical regardless
of the worker count (override workers with QSDIST_WORKERS).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction

from . import checks, estimators
from .errors import ResourceRefusal
from .exact import PiQuadratic, limit_variance
from .rng import DEFAULT_SEED

_EXIT_GATE_FAILURE = 1
_EXIT_USAGE = 2
_EXIT_REFUSAL = 3


def _allow_huge_ints() -> None:
    # exact harmonic numerators outgrow the int->str conversion guard
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(2_000_000)


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def _emit_json_lines(objs, path) -> None:
    out, close = _open_out(path)
    try:
        for obj in objs:
            out.write(json.dumps(obj, sort_keys=True, ensure_ascii=False))
            out.write("\n")
    finally:
        if close:
            out.close()


def _emit_csv(header, rows, path) -> None:
    out, close = _open_out(path)
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if close:
            out.close()


_TABLE_COLUMNS = [
    "n",
    "harmonic",
    "mean_comparisons",
    "distance_sq_rat",
    "distance_sq_pi2",
    "distance_sq",
    "w3_sq",
    "asymptote",
    "residual",
]


def _table_rows(from_n: int, to_n: int):
    """One row per n; exact columns as strings, floats as floats."""
    h = Fraction(0)
    h2 = Fraction(0)
    for n in range(to_n + 1):
        if n:
            h += Fraction(1, n)
            h2 += Fraction(1, n * n)
        if n < from_n:
            continue
        if n == 0:
            a2 = limit_variance()
            mu = Fraction(0)
            b2f = None
            asym = None
            resid = None
        else:
            rat = (2 * h + 1 + Fraction(6, n + 1)) / (n + 1) + 4 * h2
            a2 = PiQuadratic(rat, Fraction(-2, 3))
            mu = 2 * (n + 1) * h - 4 * n
            b2_rat = Fraction(4, 3) * Fraction(n + 2, n + 1) * h2 + Fraction(
                4, 3
            ) * h / (n * (n + 1) ** 2)
            b2f = float(PiQuadratic(b2_rat, Fraction(-2, 9)))
            asym = 2.0 * math.log(n) / n
            resid = n * float(a2) - 2.0 * math.log(n)
        yield {
            "n": n,
            "harmonic": str(h),
            "mean_comparisons": str(mu),
            "distance_sq_rat": str(a2.rat),
            "distance_sq_pi2": str(a2.pi2),
            "distance_sq": float(a2),
            "w3_sq": b2f,
            "asymptote": asym,
            "residual": resid,
        }


def cmd_table(ns) -> int:
    _allow_huge_ints()
    if ns.from_n < 0 or ns.to_n < ns.from_n:
        print("table: need 0 <= --from <= --to", file=sys.stderr)
        return _EXIT_USAGE
    rows = _table_rows(ns.from_n, ns.to_n)
    if ns.format == "json":
        _emit_json_lines(rows, ns.out)
    else:
        _emit_csv(
            _TABLE_COLUMNS,
            (
                ["" if row[c] is None else row[c] for c in _TABLE_COLUMNS]
                for row in rows
            ),
            ns.out,
        )
    return 0


def _report_rows(reports):
    for rep in reports:
        d = rep.as_dict()
        extra = d.pop("extra")
        d.update({f"extra_{k}": v for k, v in sorted(extra.items())})
        yield d


def _emit_reports(reports, fmt, path) -> None:
    if fmt == "csv":
        rows = list(_report_rows(reports))
        header = sorted({k for row in rows for k in row})
        _emit_csv(
            header,
            (["" if r.get(k) is None else r.get(k, "") for k in header] for r in rows),
            path,
        )
    else:
        _emit_json_lines((rep.as_dict() for rep in reports), path)


def cmd_simulate(ns) -> int:
    if ns.reps < 2:
        print("simulate: --reps must be at least 2", file=sys.stderr)
        return _EXIT_USAGE
    run = estimators.run_coupled(
        ns.n, ns.eps, ns.reps, seed=ns.seed, node_budget=ns.node_budget
    )
    reports = [
        estimators.estimate_distance_sq(ns.n, ns.eps, ns.reps, run=run),
        estimators.estimate_w1_sq(ns.n, ns.eps, ns.reps, run=run),
        estimators.w3_report_from_run(run),
        estimators.cross_term_report(run),
        estimators.decomposition_report(run),
    ]
    _emit_reports(reports, ns.format, ns.out)
    return 0 if all(rep.passed for rep in reports) else _EXIT_GATE_FAILURE


def cmd_d2(ns) -> int:
    rep = estimators.estimate_d2(ns.n, ns.eps, ns.m, seed=ns.seed)
    _emit_reports([rep], ns.format, ns.out)
    return 0 if rep.passed else _EXIT_GATE_FAILURE


def cmd_verify(ns) -> int:
    _allow_huge_ints()
    results = checks.exact_checks()
    if ns.level == "full":
        results += checks.oracle_checks(seed=ns.seed)
        results += checks.monte_carlo_checks(seed=ns.seed)
        results.append(checks.asymptotic_residual())
    for res in results:
        print(res.line())
    passed = sum(r.passed for r in results)
    print(f"verify[{ns.level}]: {passed}/{len(results)} checks passed")
    return 0 if passed == len(results) else _EXIT_GATE_FAILURE


def cmd_oracle(ns) -> int:
    if ns.mu_max > 9:
        print("oracle: --mu-max is capped at 9 (factorial blow-up)", file=sys.stderr)
        return _EXIT_USAGE
    results = [
        checks.mean_comparisons_bruteforce_equality(ns.mu_max),
        checks.quadrature_grid(),
        checks.toll_sq_quadrature_check(),
    ]
    for n in (1, 2, 3, 50):
        rep = checks.oracles.split_toll_product_check(n, reps=ns.reps, seed=ns.seed)
        results.append(checks._report_check(rep))
    for res in results:
        print(res.line())
    passed = sum(r.passed for r in results)
    print(f"oracle: {passed}/{len(results)} checks passed")
    return 0 if passed == len(results) else _EXIT_GATE_FAILURE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsdist",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="exact distance table rows")
    p.add_argument("--from", dest="from_n", type=int, required=True)
    p.add_argument("--to", dest="to_n", type=int, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("simulate", help="coupled Monte Carlo gates")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=1e-6, help="series prune width")
    p.add_argument("--reps", type=int, default=200_000)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    p.add_argument(
        "--node-budget",
        type=float,
        default=estimators.DEFAULT_NODE_BUDGET,
        help="refuse runs whose expected node count reps/eps exceeds this",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="named verification suites")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="brute-force and quadrature oracles")
    p.add_argument("--mu-max", dest="mu_max", type=int, default=8)
    p.add_argument("--reps", type=int, default=200_000)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("d2", help="quantile-coupling distance bounds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=100_000, help="samples per law")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_d2)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except ResourceRefusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return _EXIT_REFUSAL
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return _EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
