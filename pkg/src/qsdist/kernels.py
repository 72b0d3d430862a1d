"""Compiled bulk engines for the replication-heavy estimators.

Each kernel reimplements the per-replication arithmetic of
:mod:`qsdist.sim` — same splitmix64 key derivations, same traversal
order, same floating-point expression shapes — so a replication
computed here is bit-identical to the pure-Python object path (a test
enforces this). Replications are independent work items in ``prange``;
every result is written to its own slot, so output does not depend on
the thread count or schedule.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

U1 = np.uint64(1)
U2 = np.uint64(2)
U11 = np.uint64(11)
GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
TWO_NEG53 = 2.0**-53
WIDTH_FLOOR = 1e-300
STACK_CAP = 1 << 16


@njit(cache=True, inline="always")
def _mix64(z):
    z = z + GAMMA
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _u01(bits):
    return (np.float64(bits >> U11) + 0.5) * TWO_NEG53


@njit(cache=True)
def _walk(piv, lt, rt, a, b, key, nd, floor, st_a, st_b, st_k, st_n):
    """One kept subtree: (sum of widths, sum of fringe w*ln w, nodes, err).

    Mirrors sim._walk_subtree: preorder left-first, fringe left child
    first, free entries carry width in ``a``.
    """
    acc_w = 0.0
    acc_l = 0.0
    nodes = 0
    err = 0
    sp = 0
    st_a[0] = a
    st_b[0] = b
    st_k[0] = key
    st_n[0] = nd
    sp = 1
    while sp > 0:
        sp -= 1
        a = st_a[sp]
        b = st_b[sp]
        key = st_k[sp]
        nd = st_n[sp]
        nodes += 1
        if nd >= 0:
            lo = a
            hi = b
            w = hi - lo
            v = piv[nd]
            w0 = v - lo
            w1 = hi - v
            acc_w += w
            keep0 = w0 >= floor
            keep1 = w1 >= floor
            if not keep0 and w0 > 0.0:
                acc_l += w0 * np.log(w0)
            if not keep1 and w1 > 0.0:
                acc_l += w1 * np.log(w1)
            if sp + 2 > st_a.size:
                err = 1
                break
            if keep1:
                if rt[nd] >= 0:
                    st_a[sp] = v
                    st_b[sp] = hi
                    st_k[sp] = key + key + U2
                    st_n[sp] = rt[nd]
                else:
                    st_a[sp] = w1
                    st_b[sp] = 0.0
                    st_k[sp] = key + key + U2
                    st_n[sp] = -1
                sp += 1
            if keep0:
                if lt[nd] >= 0:
                    st_a[sp] = lo
                    st_b[sp] = v
                    st_k[sp] = key + key + U1
                    st_n[sp] = lt[nd]
                else:
                    st_a[sp] = w0
                    st_b[sp] = 0.0
                    st_k[sp] = key + key + U1
                    st_n[sp] = -1
                sp += 1
        else:
            w = a
            acc_w += w
            u = _u01(_mix64(key))
            w0 = w * u
            w1 = w - w0
            keep0 = w0 >= floor
            keep1 = w1 >= floor
            if not keep0 and w0 > 0.0:
                acc_l += w0 * np.log(w0)
            if not keep1 and w1 > 0.0:
                acc_l += w1 * np.log(w1)
            if sp + 2 > st_a.size:
                err = 1
                break
            if keep1:
                st_a[sp] = w1
                st_b[sp] = 0.0
                st_k[sp] = key + key + U2
                st_n[sp] = -1
                sp += 1
            if keep0:
                st_a[sp] = w0
                st_b[sp] = 0.0
                st_k[sp] = key + key + U1
                st_n[sp] = -1
                sp += 1
    return acc_w, acc_l, nodes, err


@njit(cache=True)
def _build_bst(n, keys_key, piv, lt, rt):
    """Insert the replication's n keys; returns (kn, nu0, k_left, k_right)."""
    piv[0] = _u01(_mix64(keys_key))
    lt[0] = -1
    rt[0] = -1
    kn = 0
    nu0 = 0
    k_left = 0
    k_right = 0
    for i in range(1, n):
        v = _u01(_mix64(keys_key + np.uint64(i) * GAMMA))
        piv[i] = v
        lt[i] = -1
        rt[i] = -1
        cur = 0
        depth = 0
        first_side = -1
        while True:
            depth += 1
            if v < piv[cur]:
                if depth == 1:
                    first_side = 0
                nxt = lt[cur]
                if nxt < 0:
                    lt[cur] = i
                    break
            else:
                if depth == 1:
                    first_side = 1
                nxt = rt[cur]
                if nxt < 0:
                    rt[cur] = i
                    break
            cur = nxt
        kn += depth
        if first_side == 0:
            nu0 += 1
            k_left += depth - 1
        else:
            k_right += depth - 1
    return kn, nu0, k_left, k_right


@njit(cache=True)
def _coupled_rep(n, eps, rep_key):
    """One coupled replication; mirrors sim.coupled_sample's raw parts."""
    keys_key = _mix64(rep_key + U1 * GAMMA)
    tree_key = _mix64(rep_key + U2 * GAMMA)
    piv = np.empty(n, np.float64)
    lt = np.empty(n, np.int32)
    rt = np.empty(n, np.int32)
    kn, nu0, k_left, k_right = _build_bst(n, keys_key, piv, lt, rt)

    floor = eps if eps > WIDTH_FLOOR else WIDTH_FLOOR
    st_a = np.empty(STACK_CAP, np.float64)
    st_b = np.empty(STACK_CAP, np.float64)
    st_k = np.empty(STACK_CAP, np.uint64)
    st_n = np.empty(STACK_CAP, np.int32)

    lo = 0.0
    hi = 1.0
    v = piv[0]
    w0 = v - lo
    w1 = hi - v
    t0 = w0 * np.log(w0)
    t1 = w1 * np.log(w1)
    g_root = 1.0 + 2.0 * (t0 + t1)
    nodes = 1
    err = 0
    if w0 >= floor:
        k0 = tree_key + tree_key + U1
        if lt[0] >= 0:
            acc_w, acc_l, nn, er = _walk(
                piv, lt, rt, lo, v, k0, lt[0], floor, st_a, st_b, st_k, st_n
            )
        else:
            acc_w, acc_l, nn, er = _walk(
                piv, lt, rt, w0, 0.0, k0, -1, floor, st_a, st_b, st_k, st_n
            )
        s0 = acc_w + 2.0 * (acc_l - t0)
        nodes += nn
        err |= er
    else:
        s0 = 0.0
    if w1 >= floor:
        k1 = tree_key + tree_key + U2
        if rt[0] >= 0:
            acc_w, acc_l, nn, er = _walk(
                piv, lt, rt, v, hi, k1, rt[0], floor, st_a, st_b, st_k, st_n
            )
        else:
            acc_w, acc_l, nn, er = _walk(
                piv, lt, rt, w1, 0.0, k1, -1, floor, st_a, st_b, st_k, st_n
            )
        s1 = acc_w + 2.0 * (acc_l - t1)
        nodes += nn
        err |= er
    else:
        s1 = 0.0
    return kn, nu0, k_left, k_right, v, g_root, s0, s1, nodes, err


@njit(cache=True, parallel=True)
def coupled_bulk(n, eps, reps, master):
    """Per-replication raw coupled statistics as flat arrays."""
    out_kn = np.empty(reps, np.int64)
    out_nu0 = np.empty(reps, np.int64)
    out_kl = np.empty(reps, np.int64)
    out_kr = np.empty(reps, np.int64)
    out_v = np.empty(reps, np.float64)
    out_g = np.empty(reps, np.float64)
    out_s0 = np.empty(reps, np.float64)
    out_s1 = np.empty(reps, np.float64)
    out_nodes = np.empty(reps, np.int64)
    out_err = np.zeros(reps, np.int64)
    for r in prange(reps):
        rep_key = _mix64(master + np.uint64(r + 1) * GAMMA)
        kn, nu0, kl, kr, v, g, s0, s1, nodes, err = _coupled_rep(n, eps, rep_key)
        out_kn[r] = kn
        out_nu0[r] = nu0
        out_kl[r] = kl
        out_kr[r] = kr
        out_v[r] = v
        out_g[r] = g
        out_s0[r] = s0
        out_s1[r] = s1
        out_nodes[r] = nodes
        out_err[r] = err
    return out_kn, out_nu0, out_kl, out_kr, out_v, out_g, out_s0, out_s1, out_nodes, out_err


@njit(cache=True, parallel=True)
def limit_bulk(eps, reps, master):
    """Pure limit-series samples (no occupied tree)."""
    out_y = np.empty(reps, np.float64)
    out_nodes = np.empty(reps, np.int64)
    out_err = np.zeros(reps, np.int64)
    floor = eps if eps > WIDTH_FLOOR else WIDTH_FLOOR
    for r in prange(reps):
        rep_key = _mix64(master + np.uint64(r + 1) * GAMMA)
        tree_key = _mix64(rep_key + U2 * GAMMA)
        st_a = np.empty(STACK_CAP, np.float64)
        st_b = np.empty(STACK_CAP, np.float64)
        st_k = np.empty(STACK_CAP, np.uint64)
        st_n = np.empty(STACK_CAP, np.int32)
        piv = np.empty(1, np.float64)
        lt = np.full(1, -1, np.int32)
        rt = np.full(1, -1, np.int32)
        acc_w, acc_l, nodes, err = _walk(
            piv, lt, rt, 1.0, 0.0, tree_key, -1, floor, st_a, st_b, st_k, st_n
        )
        out_y[r] = acc_w + 2.0 * acc_l
        out_nodes[r] = nodes
        out_err[r] = err
    return out_y, out_nodes, out_err


@njit(cache=True, parallel=True)
def quicksort_bulk(n, reps, master):
    """Comparison counts only (independent cost samples, no series)."""
    out_kn = np.empty(reps, np.int64)
    for r in prange(reps):
        rep_key = _mix64(master + np.uint64(r + 1) * GAMMA)
        keys_key = _mix64(rep_key + U1 * GAMMA)
        piv = np.empty(n, np.float64)
        lt = np.empty(n, np.int32)
        rt = np.empty(n, np.int32)
        kn, nu0, kl, kr = _build_bst(n, keys_key, piv, lt, rt)
        out_kn[r] = kn
    return out_kn


def warmup() -> None:
    """Force-compile every kernel (results discarded)."""
    coupled_bulk(2, 0.25, np.int64(2), np.uint64(1))
    limit_bulk(0.25, np.int64(2), np.uint64(1))
    quicksort_bulk(2, np.int64(2), np.uint64(1))
