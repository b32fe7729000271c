"""Numba kernels for the optimal-synthesis search.

States are parity matrices packed column-major into a uint64: bit
``c*n + r`` holds ``M[r][c]``.  A row op R_b ^= R_a flips bit ``b`` of
every column whose bit ``a`` is set, which is two word ops on the packed
form.  All kernels treat gate ``g`` as the row op (gates_a[g] ->
gates_b[g]).
"""

from __future__ import annotations

import numpy as np
from numba import njit

UNSEEN = 255


@njit(cache=True)
def _column_mask(n):
    cmask = np.uint64(0)
    for c in range(n):
        cmask |= np.uint64(1) << np.uint64(c * n)
    return cmask


@njit(cache=True)
def packed_identity_cols(n):
    ident = np.uint64(0)
    for i in range(n):
        ident |= np.uint64(1) << np.uint64(i * n + i)
    return ident


@njit(cache=True)
def apply_gate(s, n, a, b):
    cmask = _column_mask(n)
    return s ^ (((s >> np.uint64(a)) & cmask) << np.uint64(b))


@njit(cache=True)
def bfs_distance_table(n, gates_a, gates_b):
    """Distances from the identity over the full packed state space.

    Feasible for n <= 5 (2^25 entries); unreachable (singular) packings
    keep the UNSEEN marker.
    """
    size = 1 << (n * n)
    dist = np.full(size, UNSEEN, np.uint8)
    cmask = _column_mask(n)
    ident = packed_identity_cols(n)
    dist[ident] = 0
    frontier = np.empty(size, np.uint64)
    nxt = np.empty(size, np.uint64)
    frontier[0] = ident
    fs = 1
    level = 0
    while fs > 0:
        ns = 0
        for idx in range(fs):
            s = frontier[idx]
            for g in range(len(gates_a)):
                a = np.uint64(gates_a[g])
                b = np.uint64(gates_b[g])
                t = s ^ (((s >> a) & cmask) << b)
                if dist[t] == UNSEEN:
                    dist[t] = level + 1
                    nxt[ns] = t
                    ns += 1
        frontier, nxt = nxt, frontier
        fs = ns
        level += 1
    return dist


@njit(cache=True)
def pdb_distance_table(n, cols, gates_a, gates_b):
    """Distances to the goal projection over a tracked-column subspace.

    The projected state keeps only the columns in ``cols`` (k of them,
    re-packed into the low k*n bits).  Every legal gate acts exactly as
    it does on full states, so projected distance lower-bounds true
    distance for any full state.
    """
    k = len(cols)
    size = 1 << (n * k)
    dist = np.full(size, UNSEEN, np.uint8)
    goal = np.uint64(0)
    for j in range(k):
        goal |= np.uint64(1) << np.uint64(j * n + cols[j])
    cmask = np.uint64(0)
    for j in range(k):
        cmask |= np.uint64(1) << np.uint64(j * n)
    dist[goal] = 0
    frontier = np.empty(size, np.uint64)
    nxt = np.empty(size, np.uint64)
    frontier[0] = goal
    fs = 1
    level = 0
    while fs > 0:
        ns = 0
        for idx in range(fs):
            s = frontier[idx]
            for g in range(len(gates_a)):
                a = np.uint64(gates_a[g])
                b = np.uint64(gates_b[g])
                t = s ^ (((s >> a) & cmask) << b)
                if dist[t] == UNSEEN:
                    dist[t] = level + 1
                    nxt[ns] = t
                    ns += 1
        frontier, nxt = nxt, frontier
        fs = ns
        level += 1
    return dist


@njit(cache=True, inline="always")
def _pdb_heuristic(s, n, col_sets, pdbs):
    rmask = np.uint64((1 << n) - 1)
    best = 0
    for p in range(col_sets.shape[0]):
        idx = np.uint64(0)
        for j in range(col_sets.shape[1]):
            idx |= ((s >> np.uint64(col_sets[p, j] * n)) & rmask) << np.uint64(j * n)
        d = pdbs[p, idx]
        if d > best:
            best = d
    return best


@njit(cache=True, inline="always")
def _bad_row_count(s, n):
    # rows differing from the identity row; admissible because one gate
    # rewrites exactly one row
    cmask = _column_mask(n)
    bad = 0
    for r in range(n):
        if ((s >> np.uint64(r)) & cmask) != (np.uint64(1) << np.uint64(r * n)):
            bad += 1
    return bad


@njit(cache=True)
def heuristic_value(s, n, col_sets, pdbs):
    h = _pdb_heuristic(s, n, col_sets, pdbs)
    hb = _bad_row_count(s, n)
    if hb > h:
        h = hb
    return h


@njit(cache=True)
def ida_iteration(
    s0,
    n,
    col_sets,
    pdbs,
    gates_a,
    gates_b,
    commute_ok,
    threshold,
    max_nodes,
    tt_keys,
    tt_g,
    tt_stamp,
    stamp,
    path_out,
):
    """One depth-limited DFS pass of IDA*.

    Returns (status, value, nodes): status 0 = solution found (length in
    value, reduction gate ids in path_out), 1 = threshold exhausted
    (value = next f threshold, 255 if none), 2 = node budget hit.
    Successors are tried in action-id order; consecutive commuting gates
    are forced into ascending id order and immediate undos are skipped.
    The transposition table prunes states revisited at equal or higher g
    within this pass, evicting deeper entries first on collision.
    """
    cmask = _column_mask(n)
    ident = packed_identity_cols(n)
    ngates = len(gates_a)
    # table size is a power of two; hash with the top product bits so
    # every state bit participates
    tt_bits = 0
    while (np.uint64(1) << np.uint64(tt_bits)) < np.uint64(len(tt_keys)):
        tt_bits += 1
    tt_shift = np.uint64(64 - tt_bits)
    nodes = np.int64(0)
    next_threshold = np.int64(255)

    states = np.empty(threshold + 2, np.uint64)
    iters = np.empty(threshold + 2, np.int64)
    states[0] = s0
    iters[0] = 0
    depth = 0
    while depth >= 0:
        s = states[depth]
        g = iters[depth]
        if g >= ngates:
            depth -= 1
            continue
        iters[depth] += 1
        if depth > 0:
            prev = path_out[depth - 1]
            if g == prev:
                continue
            if commute_ok[prev, g] and g < prev:
                continue
        a = np.uint64(gates_a[g])
        b = np.uint64(gates_b[g])
        t = s ^ (((s >> a) & cmask) << b)
        nodes += 1
        if nodes > max_nodes:
            return 2, np.int64(0), nodes
        gcost = depth + 1
        if t == ident:
            path_out[depth] = g
            return 0, np.int64(gcost), nodes
        h = heuristic_value(t, n, col_sets, pdbs)
        f = gcost + h
        if f > threshold:
            if f < next_threshold:
                next_threshold = f
            continue
        slot = (t * np.uint64(0x9E3779B97F4A7C15)) >> tt_shift
        if tt_keys[slot] == t and tt_stamp[slot] == stamp:
            if tt_g[slot] <= gcost:
                continue
            tt_g[slot] = gcost
        elif tt_stamp[slot] != stamp or gcost < tt_g[slot]:
            tt_keys[slot] = t
            tt_g[slot] = gcost
            tt_stamp[slot] = stamp
        path_out[depth] = g
        depth += 1
        states[depth] = t
        iters[depth] = 0
    return 1, next_threshold, nodes
