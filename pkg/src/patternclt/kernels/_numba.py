"""Compiled kernels for window coding and longest-subsequence dynamic programs.

All index arguments and results are 0-based. A result length of -1 means the
index constraint admits no following subsequence.
"""
import numpy as np
from numba import njit

_EMPTY = np.int64(-1)


@njit(cache=True, nogil=True)
def _factorials(r):
    f = np.ones(r + 1, dtype=np.int64)
    for i in range(1, r + 1):
        f[i] = f[i - 1] * i
    return f


@njit(cache=True, nogil=True)
def _code(vals, idx, r, fact):
    """Lehmer code of the values at positions idx[0..r-1]; -1 on a tie."""
    code = 0
    for a in range(r):
        va = vals[idx[a]]
        smaller = 0
        for b in range(a + 1, r):
            vb = vals[idx[b]]
            if vb == va:
                return -1
            if vb < va:
                smaller += 1
        code += smaller * fact[r - 1 - a]
    return code


@njit(cache=True, nogil=True)
def window_codes(vals, r):
    n = vals.shape[0]
    m = n - r + 1
    if m < 0:
        m = 0
    out = np.empty(m, dtype=np.int64)
    fact = _factorials(r)
    idx = np.empty(r, dtype=np.int64)
    for j in range(m):
        for a in range(r):
            idx[a] = j + a
        out[j] = _code(vals, idx, r, fact)
    return out


@njit(cache=True, nogil=True)
def _dense_ranks(vals):
    n = vals.shape[0]
    order = np.argsort(vals, kind="mergesort")
    ranks = np.empty(n, dtype=np.int64)
    cur = 0
    for t in range(n):
        if t == 0 or vals[order[t]] != vals[order[t - 1]]:
            cur += 1
        ranks[order[t]] = cur
    return ranks, cur


@njit(cache=True, nogil=True)
def _fw_query(tree, pos):
    best = _EMPTY
    while pos > 0:
        if tree[pos] > best:
            best = tree[pos]
        pos -= pos & (-pos)
    return best


@njit(cache=True, nogil=True)
def _fw_update(tree, pos, key):
    size = tree.shape[0] - 1
    while pos <= size:
        if key > tree[pos]:
            tree[pos] = key
        pos += pos & (-pos)


@njit(cache=True, nogil=True)
def _lps2_core(vals, up_ok, down_ok, forbidden, forced, want_witness):
    n = vals.shape[0]
    k = up_ok.shape[0]
    ranks, nr = _dense_ranks(vals)
    base = np.int64(n + 1)
    # prefix-max trees over ranks (for ups) and over reversed ranks (for downs)
    up_tree = np.full((k, nr + 1), _EMPTY, dtype=np.int64)
    dn_tree = np.full((k, nr + 1), _EMPTY, dtype=np.int64)
    f = np.full((n, k), _EMPTY, dtype=np.int64)
    pred = np.full((n, k), _EMPTY, dtype=np.int64)
    n_forced = 0
    for j in range(n):
        if forced[j]:
            n_forced += 1
    seen_forced = 0
    start_res = 1 % k
    for j in range(n):
        if forbidden[j]:
            continue
        rj = ranks[j]
        for c in range(k):
            ph = (c - 1) % k
            best = _EMPTY
            if up_ok[ph]:
                q = _fw_query(up_tree[c], rj - 1)
                if q > best:
                    best = q
            if down_ok[ph]:
                q = _fw_query(dn_tree[c], nr - rj)
                if q > best:
                    best = q
            if best >= 0:
                nc = (c + 1) % k
                length = best // base + 1
                if length > f[j, nc]:
                    f[j, nc] = length
                    pred[j, nc] = best % base - 1
        if seen_forced == 0 and f[j, start_res] < 1:
            f[j, start_res] = 1
            pred[j, start_res] = -1
        if forced[j]:
            seen_forced += 1
            up_tree[:, :] = _EMPTY
            dn_tree[:, :] = _EMPTY
        for c in range(k):
            if f[j, c] >= 0:
                key = f[j, c] * base + j + 1
                _fw_update(up_tree[c], rj, key)
                _fw_update(dn_tree[c], nr + 1 - rj, key)
    best_len = _EMPTY
    best_j = -1
    best_c = -1
    if n_forced == 0:
        best_len = 0
    passed = 0
    for j in range(n):
        if forced[j]:
            passed += 1
        if passed < n_forced:
            continue
        for c in range(k):
            if f[j, c] > best_len:
                best_len = f[j, c]
                best_j = j
                best_c = c
    if best_len <= 0 or not want_witness:
        return best_len, np.empty(0, dtype=np.int64)
    wit = np.empty(best_len, dtype=np.int64)
    j = best_j
    c = best_c
    t = best_len - 1
    while j >= 0:
        wit[t] = j
        t -= 1
        pj = pred[j, c]
        c = (c - 1) % k
        j = pj
    return best_len, wit


@njit(cache=True, nogil=True)
def lps2(vals, up_ok, down_ok, forbidden, forced):
    """Longest subsequence for a width-2 pattern with Fenwick-tree maxima.

    up_ok[ph] / down_ok[ph] say whether an up / down step is allowed at
    window phase ph. Runs in O(n k log n).
    """
    return _lps2_core(vals, up_ok, down_ok, forbidden, forced, True)


@njit(cache=True, nogil=True)
def lps2_lengths(mat, up_ok, down_ok):
    rows, n = mat.shape
    out = np.empty(rows, dtype=np.int64)
    none = np.zeros(n, dtype=np.bool_)
    for i in range(rows):
        out[i] = _lps2_core(mat[i], up_ok, down_ok, none, none, False)[0]
    return out


@njit(cache=True, nogil=True)
def lps_states(vals, r, table, forbidden, forced):
    """Longest subsequence for any window width r by DP over the last r-1 picks.

    table[ph, code] tells whether the window with Lehmer code `code` is
    allowed at phase ph. Costs O(k r m^r) for m admissible positions.
    """
    k = table.shape[0]
    n = vals.shape[0]
    fact = _factorials(r)
    pos = np.empty(n, dtype=np.int64)
    m = 0
    for j in range(n):
        if not forbidden[j]:
            pos[m] = j
            m += 1
    pos = pos[:m]
    cnt = np.zeros(m + 1, dtype=np.int64)
    for a in range(m):
        cnt[a + 1] = cnt[a] + (1 if forced[pos[a]] else 0)
    n_forced = cnt[m]
    w = r - 1
    if m < w or m == 0:
        # too short for any window: everything admissible follows vacuously
        return m, pos.copy()
    nstates = m ** w
    f = np.full((nstates, k), _EMPTY, dtype=np.int64)
    pred = np.full((nstates, k), _EMPTY, dtype=np.int64)
    digits = np.empty(w, dtype=np.int64)
    win = np.empty(r, dtype=np.int64)
    c0 = w % k
    for s in range(nstates):
        x = s
        ok = True
        for t in range(w):
            digits[t] = x % m
            x //= m
        for t in range(1, w):
            if digits[t] <= digits[t - 1]:
                ok = False
                break
        if not ok:
            continue
        last = digits[w - 1]
        inside = 0
        for t in range(w):
            if forced[pos[digits[t]]]:
                inside += 1
        if cnt[last + 1] == inside and f[s, c0] < w:
            f[s, c0] = w
            pred[s, c0] = -2
    best_len = _EMPTY
    best_s = -1
    best_c = -1
    if n_forced == 0:
        best_len = 0
    for s in range(nstates):
        x = s
        ok = True
        for t in range(w):
            digits[t] = x % m
            x //= m
        for t in range(1, w):
            if digits[t] <= digits[t - 1]:
                ok = False
                break
        if not ok:
            continue
        last = digits[w - 1]
        for c in range(k):
            cur = f[s, c]
            if cur < 0:
                continue
            if cnt[m] - cnt[last + 1] == 0 and cur > best_len:
                best_len = cur
                best_s = s
                best_c = c
            ph = (c - w) % k
            nc = (c + 1) % k
            for t in range(w):
                win[t] = pos[digits[t]]
            for j in range(last + 1, m):
                win[w] = pos[j]
                code = _code(vals, win, r, fact)
                if code >= 0 and table[ph, code]:
                    ns = 0
                    mul = 1
                    for t in range(1, w):
                        ns += digits[t] * mul
                        mul *= m
                    ns += j * mul
                    if cur + 1 > f[ns, nc]:
                        f[ns, nc] = cur + 1
                        pred[ns, nc] = digits[0]
                if forced[pos[j]]:
                    break
    if best_len <= 0:
        return best_len, np.empty(0, dtype=np.int64)
    wit = np.empty(best_len, dtype=np.int64)
    s = best_s
    c = best_c
    x = s
    for t in range(w):
        digits[t] = x % m
        x //= m
    t_out = best_len - 1
    for t in range(w - 1, -1, -1):
        wit[t_out] = digits[t]
        t_out -= 1
    while pred[s, c] != -2:
        d0 = pred[s, c]
        ns = d0
        mul = m
        for t in range(0, w - 1):
            ns += digits[t] * mul
            mul *= m
        for t in range(w - 1, 0, -1):
            digits[t] = digits[t - 1]
        digits[0] = d0
        wit[t_out] = d0
        t_out -= 1
        s = ns
        c = (c - 1) % k
    for t in range(best_len):
        wit[t] = pos[wit[t]]
    return best_len, wit


@njit(cache=True, nogil=True)
def lps_states_lengths(mat, r, table):
    rows, n = mat.shape
    out = np.empty(rows, dtype=np.int64)
    none = np.zeros(n, dtype=np.bool_)
    for i in range(rows):
        out[i] = lps_states(mat[i], r, table, none, none)[0]
    return out


@njit(cache=True, nogil=True)
def _follows_idx(vals, idx, size, r, table, fact, win):
    k = table.shape[0]
    for j in range(size - r + 1):
        for a in range(r):
            win[a] = idx[j + a]
        code = _code(vals, win, r, fact)
        if code < 0 or not table[j % k, code]:
            return False
    return True


@njit(cache=True, nogil=True)
def lps_bruteforce(vals, r, table):
    """Exhaustive search: subsets in decreasing size, lexicographic within a size."""
    n = vals.shape[0]
    fact = _factorials(r)
    win = np.empty(r, dtype=np.int64)
    idx = np.empty(n, dtype=np.int64)
    for size in range(n, 0, -1):
        for t in range(size):
            idx[t] = t
        while True:
            if _follows_idx(vals, idx, size, r, table, fact, win):
                return size, idx[:size].copy()
            # next combination
            t = size - 1
            while t >= 0 and idx[t] == n - size + t:
                t -= 1
            if t < 0:
                break
            idx[t] += 1
            for u in range(t + 1, size):
                idx[u] = idx[u - 1] + 1
    return 0, np.empty(0, dtype=np.int64)
