"""Coupled simulation of the finite sorting cost and its limit series.

One replication lives on one probability space, exactly as the theory
couples them: the first ``n`` data keys build the binary search tree
whose insertion depths sum to the comparison count ``K_n``, and the
limit value is the sum of per-node toll terms ``phi * C(u)`` over the
*same* tree, extended below the occupied part with fresh uniform pivots
(the relative rank of the next key landing in an interval is uniform,
so the extension realizes the same joint law) and pruned at interval
width ``eps``.

The evaluation accumulates the algebraically equivalent telescoped form

    sum_T G = sum_{T} phi  +  2 sum_{fringe} phi ln phi  -  2 phi_top ln phi_top

which needs one log per pruned fringe child instead of two per node.
Traversal is an explicit work stack in strict preorder (left first);
the bulk kernels in :mod:`qsdist.kernels` replicate the identical
arithmetic and ordering, and a test asserts bit-equality between the
two paths.

Pruning bias: each dropped subtree is conditionally centered, so the
truncation only *lowers* second moments, by at most ``sigma^2 * eps``
(the fringe is an antichain of total width <= 1 with every width < eps).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log

import numpy as np

from .errors import ResourceRefusal
from .exact import mean_comparisons_float_table, split_toll_float_vector
from .rng import (
    ReplicationStream,
    left_key,
    mix64,
    mix64_vec,
    right_key,
    u01,
    u01_vec,
)

# unconditional hard floor: widths this small terminate descent even if
# the caller passed a smaller eps (denormal guard)
WIDTH_FLOOR = 1e-300

MAX_LEVELS = 16  # level_sums needs 2^(J+1) nodes in memory


@dataclass
class IntervalNode:
    """Node of the (partially extended) search tree.

    ``occupied`` records whether the pivot came from the first ``n``
    data keys or was drawn fresh when extending the tree.
    """

    label: str
    lo: float
    hi: float
    pivot: float | None = None
    occupied: bool = False
    left: "IntervalNode | None" = None
    right: "IntervalNode | None" = None

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class BstStats:
    """Comparison counts of one sorted replication."""

    n: int
    kn: int
    nu0: int
    nu1: int
    k_left: int
    k_right: int


@dataclass(frozen=True)
class CoupledSample:
    """Full record of one coupled replication."""

    n: int
    y_n: float
    y_limit: float
    eps: float
    w1: float
    w2: float
    w3: float
    nu0: int
    kn: int


def run_quicksort(n: int, stream: ReplicationStream) -> tuple[BstStats, IntervalNode]:
    """Insert n iid uniform keys into a search tree, counting comparisons.

    ``K_n`` is the sum of insertion depths (root depth 0); the subtree
    counts satisfy ``K_n = (n-1) + k_left + k_right`` by construction.
    """
    if n < 1:
        raise ValueError("n must be positive")
    root = IntervalNode(label="", lo=0.0, hi=1.0, pivot=stream.key(0), occupied=True)
    kn = 0
    nu0 = 0
    k_left = 0
    k_right = 0
    for i in range(1, n):
        v = stream.key(i)
        node = root
        depth = 0
        first_side = -1
        while True:
            depth += 1
            if v < node.pivot:
                if depth == 1:
                    first_side = 0
                if node.left is None:
                    node.left = IntervalNode(
                        label=node.label + "0",
                        lo=node.lo,
                        hi=node.pivot,
                        pivot=v,
                        occupied=True,
                    )
                    break
                node = node.left
            else:
                if depth == 1:
                    first_side = 1
                if node.right is None:
                    node.right = IntervalNode(
                        label=node.label + "1",
                        lo=node.pivot,
                        hi=node.hi,
                        pivot=v,
                        occupied=True,
                    )
                    break
                node = node.right
        kn += depth
        if first_side == 0:
            nu0 += 1
            k_left += depth - 1
        else:
            k_right += depth - 1
    stats = BstStats(
        n=n, kn=kn, nu0=nu0, nu1=n - 1 - nu0, k_left=k_left, k_right=k_right
    )
    return stats, root


def _check_eps(eps: float) -> None:
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"prune width eps={eps!r} outside (0, 1]")


def _walk_subtree(top_node, top_a, top_b, top_key, eps) -> tuple[float, float]:
    """(sum of widths, sum of fringe w*ln(w)) over one kept subtree.

    Stack entries are (a, b, key, node): occupied nodes carry their
    interval (a=lo, b=hi) and IntervalNode; free nodes carry a=width and
    node=None (an occupied node's missing child enters as a free entry
    with its width). Children are pushed right-then-left so the
    traversal is preorder left-first; fringe terms are added left child
    first. The bulk kernel mirrors this arithmetic exactly.
    """
    floor = eps if eps > WIDTH_FLOOR else WIDTH_FLOOR
    acc_w = 0.0
    acc_l = 0.0
    stack = [(top_a, top_b, top_key, top_node)]
    while stack:
        a, b, key, node = stack.pop()
        if node is not None:
            lo, hi = a, b
            w = hi - lo
            v = node.pivot
            w0 = v - lo
            w1 = hi - v
            acc_w += w
            keep0 = w0 >= floor
            keep1 = w1 >= floor
            if not keep0 and w0 > 0.0:
                acc_l += w0 * log(w0)
            if not keep1 and w1 > 0.0:
                acc_l += w1 * log(w1)
            if keep1:
                if node.right is not None:
                    stack.append((v, hi, right_key(key), node.right))
                else:
                    stack.append((w1, 0.0, right_key(key), None))
            if keep0:
                if node.left is not None:
                    stack.append((lo, v, left_key(key), node.left))
                else:
                    stack.append((w0, 0.0, left_key(key), None))
        else:
            w = a
            acc_w += w
            u = u01(mix64(key))
            w0 = w * u
            w1 = w - w0
            keep0 = w0 >= floor
            keep1 = w1 >= floor
            if not keep0 and w0 > 0.0:
                acc_l += w0 * log(w0)
            if not keep1 and w1 > 0.0:
                acc_l += w1 * log(w1)
            if keep1:
                stack.append((w1, 0.0, right_key(key), None))
            if keep0:
                stack.append((w0, 0.0, left_key(key), None))
    return acc_w, acc_l


def _split_parts(
    tree: IntervalNode, eps: float, stream: ReplicationStream
) -> tuple[float, float, float]:
    """(g_root, s0, s1): root toll term and the two kept-subtree sums."""
    floor = eps if eps > WIDTH_FLOOR else WIDTH_FLOOR
    key = stream.tree_key
    lo, hi = tree.lo, tree.hi
    v = tree.pivot
    w0 = v - lo
    w1 = hi - v
    t0 = w0 * log(w0)
    t1 = w1 * log(w1)
    g_root = 1.0 + 2.0 * (t0 + t1)
    if w0 >= floor:
        if tree.left is not None:
            acc_w, acc_l = _walk_subtree(tree.left, lo, v, left_key(key), eps)
        else:
            acc_w, acc_l = _walk_subtree(None, w0, 0.0, left_key(key), eps)
        s0 = acc_w + 2.0 * (acc_l - t0)
    else:
        s0 = 0.0
    if w1 >= floor:
        if tree.right is not None:
            acc_w, acc_l = _walk_subtree(tree.right, v, hi, right_key(key), eps)
        else:
            acc_w, acc_l = _walk_subtree(None, w1, 0.0, right_key(key), eps)
        s1 = acc_w + 2.0 * (acc_l - t1)
    else:
        s1 = 0.0
    return g_root, s0, s1


def evaluate_limit(
    tree: IntervalNode | None, eps: float, stream: ReplicationStream
) -> float:
    """Width-pruned evaluation of the limit series on the given tree.

    Sums ``phi * C(u)`` over every node of width >= eps, taking pivots
    from occupied nodes and drawing fresh node-keyed uniforms below
    them. ``tree=None`` samples the pure limit (no occupied nodes).
    """
    _check_eps(eps)
    if tree is None:
        acc_w, acc_l = _walk_subtree(None, 1.0, 0.0, stream.tree_key, eps)
        return acc_w + 2.0 * acc_l
    g_root, s0, s1 = _split_parts(tree, eps, stream)
    return g_root + s0 + s1


def coupled_sample(n: int, eps: float, stream: ReplicationStream) -> CoupledSample:
    """One replication of analysed cost vs pruned limit on shared keys.

    The mismatch decomposes as y_n - y_limit = w1 + w2 + w3 with

        w1 = (nu0+1)/(n+1) * Y_{n,left}  - S_left
        w2 = (nu1+1)/(n+1) * Y_{n,right} - S_right
        w3 = n/(n+1) * split_toll(n, nu0+1) - C(u_root)

    which holds pathwise up to float round-off.
    """
    _check_eps(eps)
    stats, tree = run_quicksort(n, stream)
    g_root, s0, s1 = _split_parts(tree, eps, stream)
    y_limit = g_root + s0 + s1

    mu = mean_comparisons_float_table(n)
    y_n = (stats.kn - mu[n]) / (n + 1.0)
    y_n0 = (stats.k_left - mu[stats.nu0]) / (stats.nu0 + 1.0)
    y_n1 = (stats.k_right - mu[stats.nu1]) / (stats.nu1 + 1.0)
    cn = _split_toll_floats(n)
    w1 = ((stats.nu0 + 1.0) / (n + 1.0)) * y_n0 - s0
    w2 = ((stats.nu1 + 1.0) / (n + 1.0)) * y_n1 - s1
    w3 = (n / (n + 1.0)) * cn[stats.nu0] - g_root
    return CoupledSample(
        n=n,
        y_n=y_n,
        y_limit=y_limit,
        eps=eps,
        w1=w1,
        w2=w2,
        w3=w3,
        nu0=stats.nu0,
        kn=stats.kn,
    )


_toll_cache: dict[int, np.ndarray] = {}


def _split_toll_floats(n: int) -> np.ndarray:
    tbl = _toll_cache.get(n)
    if tbl is None:
        tbl = split_toll_float_vector(n)
        _toll_cache[n] = tbl
    return tbl


def split_identity_residual(n: int, stream: ReplicationStream) -> float:
    """|lhs - rhs| of the one-level cost identity on one simulated tree.

    The normalized cost must equal the toll of the root split plus the
    two normalized subtree costs; the identity is exact pathwise, so
    only float round-off remains.
    """
    stats, _ = run_quicksort(n, stream)
    mu = mean_comparisons_float_table(n)
    cn = _split_toll_floats(n)
    lhs = (stats.kn - mu[n]) / (n + 1.0)
    y_n0 = (stats.k_left - mu[stats.nu0]) / (stats.nu0 + 1.0)
    y_n1 = (stats.k_right - mu[stats.nu1]) / (stats.nu1 + 1.0)
    rhs = (
        (n / (n + 1.0)) * cn[stats.nu0]
        + ((stats.nu0 + 1.0) / (n + 1.0)) * y_n0
        + ((stats.nu1 + 1.0) / (n + 1.0)) * y_n1
    )
    return abs(lhs - rhs)


def level_sums(j_max: int, stream: ReplicationStream) -> np.ndarray:
    """Per-level sums of phi * C(u) over the complete splitting tree.

    Level j has 2^j nodes; all pivots are fresh node-keyed uniforms.
    Refuses j_max > 16 (node count 2^(j+1)-1 must stay in memory).
    """
    if j_max < 0:
        raise ValueError("j_max must be non-negative")
    if j_max > MAX_LEVELS:
        raise ResourceRefusal(
            f"level_sums depth {j_max} exceeds the hard cap {MAX_LEVELS}"
        )
    widths = np.array([1.0])
    keys = np.array([stream.tree_key], dtype=np.uint64)
    out = np.empty(j_max + 1)
    for j in range(j_max + 1):
        u = u01_vec(mix64_vec(keys))
        g = widths * (1.0 + 2.0 * u * np.log(u) + 2.0 * (1.0 - u) * np.log(1.0 - u))
        out[j] = g.sum()
        if j < j_max:
            w0 = widths * u
            nxt = np.empty(widths.size * 2)
            nxt[0::2] = w0
            nxt[1::2] = widths - w0
            widths = nxt
            kk = np.empty(keys.size * 2, dtype=np.uint64)
            kk[0::2] = keys + keys + np.uint64(1)
            kk[1::2] = keys + keys + np.uint64(2)
            keys = kk
    return out
