"""Pure-numpy counterparts of the compiled kernels.

Same signatures and results as ``_numba``; the width-2 program scans all
predecessors with vectorized comparisons instead of Fenwick trees, so it is
O(n^2 k) but needs no compiler.
"""
import itertools
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _fact(r):
    return np.array([math.factorial(i) for i in range(r + 1)], dtype=np.int64)


def window_codes(vals, r):
    vals = np.asarray(vals, dtype=np.float64)
    if vals.shape[0] < r:
        return np.empty(0, dtype=np.int64)
    win = sliding_window_view(vals, r)
    fact = _fact(r)
    lt = win[:, None, :] < win[:, :, None]  # lt[j, a, b]: win[b] < win[a]
    eq = win[:, None, :] == win[:, :, None]
    later = np.triu(np.ones((r, r), dtype=bool), 1)
    smaller = (lt & later).sum(axis=2)
    codes = (smaller * fact[r - 1 - np.arange(r)]).sum(axis=1)
    tie = (eq & later).any(axis=(1, 2))
    codes[tie] = -1
    return codes.astype(np.int64)


def _lps2_core(vals, up_ok, down_ok, forbidden, forced, want_witness):
    vals = np.asarray(vals, dtype=np.float64)
    n = vals.shape[0]
    k = up_ok.shape[0]
    f = np.full((n, k), -1, dtype=np.int64)
    pred = np.full((n, k), -1, dtype=np.int64)
    forced_idx = np.flatnonzero(forced)
    n_forced = forced_idx.size
    barrier = 0  # first index a predecessor may have
    seen_forced = 0
    start_res = 1 % k
    for j in range(n):
        if forbidden[j]:
            continue
        prev = vals[barrier:j]
        lower = prev < vals[j]
        higher = prev > vals[j]
        for c in range(k):
            ph = (c - 1) % k
            ok = np.zeros(prev.shape[0], dtype=bool)
            if up_ok[ph]:
                ok |= lower
            if down_ok[ph]:
                ok |= higher
            cand = np.where(ok, f[barrier:j, c], -1)
            if cand.size and cand.max() >= 0:
                # ties broken toward the latest predecessor, as in the compiled kernel
                top = cand.max()
                i = barrier + np.flatnonzero(cand == top)[-1]
                nc = (c + 1) % k
                if top + 1 > f[j, nc]:
                    f[j, nc] = top + 1
                    pred[j, nc] = i
        if seen_forced == 0 and f[j, start_res] < 1:
            f[j, start_res] = 1
            pred[j, start_res] = -1
        if forced[j]:
            seen_forced += 1
            barrier = j
    lo = forced_idx[-1] if n_forced else 0
    tail = f[lo:]
    best_len = 0 if n_forced == 0 else -1
    if tail.size and tail.max() > best_len:
        best_len = int(tail.max())
    if best_len <= 0 or not want_witness:
        return best_len, np.empty(0, dtype=np.int64)
    hits = np.argwhere(tail == best_len)
    # match the compiled kernel: first j in scan order, first residue
    j, c = int(hits[0, 0]) + lo, int(hits[0, 1])
    wit = []
    while j >= 0:
        wit.append(j)
        j, c = int(pred[j, c]), (c - 1) % k
    return best_len, np.array(wit[::-1], dtype=np.int64)


def lps2(vals, up_ok, down_ok, forbidden, forced):
    return _lps2_core(vals, up_ok, down_ok, forbidden, forced, True)


def lps2_lengths(mat, up_ok, down_ok):
    mat = np.asarray(mat, dtype=np.float64)
    none = np.zeros(mat.shape[1], dtype=bool)
    return np.array(
        [_lps2_core(row, up_ok, down_ok, none, none, False)[0] for row in mat],
        dtype=np.int64,
    )


def _window_ok(vals, window, r, table, ph, fact):
    w = vals[list(window)]
    if np.unique(w).size < r:
        return False
    smaller = [(w[a + 1:] < w[a]).sum() for a in range(r)]
    code = int(sum(s * fact[r - 1 - a] for a, s in enumerate(smaller)))
    return bool(table[ph, code])


def lps_states(vals, r, table, forbidden, forced):
    vals = np.asarray(vals, dtype=np.float64)
    k = table.shape[0]
    fact = _fact(r)
    pos = [j for j in range(vals.shape[0]) if not forbidden[j]]
    forced_set = {j for j in pos if forced[j]}
    w = r - 1
    if len(pos) < w or not pos:
        return len(pos), np.array(pos, dtype=np.int64)
    last_forced = max(forced_set) if forced_set else -1
    # best[(state tuple, residue)] = (length, predecessor key)
    best = {}
    for combo in itertools.combinations(pos, w):
        if all(f in combo for f in forced_set if f <= combo[-1]):
            best[(combo, w % k)] = (w, None)
    order = sorted(best, key=lambda key: key[0][-1])
    frontier = sorted(pos)
    result = (0, None) if not forced_set else (-1, None)
    seen = set()
    # process states in order of their last index so predecessors are final
    queue = {}
    for key in order:
        queue.setdefault(key[0][-1], []).append(key)
    for last in frontier:
        for key in queue.get(last, []):
            if key in seen:
                continue
            seen.add(key)
            state, c = key
            cur = best[key][0]
            if last >= last_forced and cur > result[0]:
                result = (cur, key)
            ph = (c - w) % k
            for j in frontier:
                if j <= last:
                    continue
                if _window_ok(vals, state + (j,), r, table, ph, fact):
                    nkey = (state[1:] + (j,), (c + 1) % k)
                    if nkey not in best or best[nkey][0] < cur + 1:
                        best[nkey] = (cur + 1, key)
                        queue.setdefault(j, []).append(nkey)
                if j in forced_set:
                    break
    length, key = result
    if length <= 0:
        return length, np.empty(0, dtype=np.int64)
    wit = list(key[0])
    while best[key][1] is not None:
        key = best[key][1]
        wit.insert(0, key[0][0])
    return length, np.array(wit, dtype=np.int64)


def lps_states_lengths(mat, r, table):
    mat = np.asarray(mat, dtype=np.float64)
    none = np.zeros(mat.shape[1], dtype=bool)
    return np.array(
        [lps_states(row, r, table, none, none)[0] for row in mat], dtype=np.int64
    )


def lps_bruteforce(vals, r, table):
    vals = np.asarray(vals, dtype=np.float64)
    n = vals.shape[0]
    k = table.shape[0]
    fact = _fact(r)
    for size in range(n, 0, -1):
        for combo in itertools.combinations(range(n), size):
            if all(
                _window_ok(vals, combo[j:j + r], r, table, j % k, fact)
                for j in range(size - r + 1)
            ):
                return size, np.array(combo, dtype=np.int64)
    return 0, np.empty(0, dtype=np.int64)
