import bisect
import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patternclt.patterns import follows, parse_pattern
from patternclt.subsequence import (IndexConstraint, InfeasibleConstraint, longest,
                                    longest_bruteforce, longest_constrained,
                                    longest_on_interval)

from conftest import CONST3

PATTERNS = ["U", "UD", "UDD", "UUDD", CONST3, "r=2; 0:12,21; 1:21", "r=3; 0:132,213; 1:123"]


def patience_lis(xs):
    """Strict LIS length by patience sorting."""
    piles = []
    for x in xs:
        i = bisect.bisect_left(piles, x)
        if i == len(piles):
            piles.append(x)
        else:
            piles[i] = x
    return len(piles)


def check_witness(seq, p, res):
    w = np.array(res.witness, dtype=int)
    assert len(w) == res.length
    assert (np.diff(w) > 0).all()
    assert follows(np.asarray(seq, dtype=float)[w - 1], p)


def test_small_examples(ud):
    res = longest([2, 1, 3], ud)
    assert res.length == 2
    check_witness([2, 1, 3], ud, res)
    assert longest([3, 1, 2], parse_pattern("U")).length == 2
    assert longest([0.3, 0.1], parse_pattern(CONST3)).length == 2
    assert longest([], ud) == longest_bruteforce([], ud)
    assert longest([], ud).length == 0


def test_s3_distribution(ud):
    counts = Counter(longest(p, ud).length for p in itertools.permutations([1, 2, 3]))
    brute = Counter(longest_bruteforce(p, ud).length for p in itertools.permutations([1, 2, 3]))
    assert counts == brute == Counter({1: 1, 2: 3, 3: 2})


def test_lis_against_patience_sorting():
    p = parse_pattern("U")
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = rng.random(int(rng.integers(0, 21)))
        assert longest_bruteforce(x, p).length == patience_lis(list(x))
        assert longest(x, p).length == patience_lis(list(x))


def test_bruteforce_limit(ud):
    with pytest.raises(ValueError, match="n <= 22"):
        longest_bruteforce(np.arange(23), ud)


@pytest.mark.parametrize("text", PATTERNS)
def test_engine_matches_bruteforce_random(text):
    p = parse_pattern(text)
    rng = np.random.default_rng(11)
    for _ in range(150):
        n = int(rng.integers(0, 13))
        x = rng.random(n) if rng.random() < 0.7 else rng.integers(0, 4, n).astype(float)
        res = longest(x, p)
        assert res.length == longest_bruteforce(x, p).length
        if res.length:
            check_witness(x, p, res)


def test_witness_is_deterministic(ud):
    x = np.random.default_rng(3).random(200)
    assert longest(x, ud) == longest(x, ud)


def test_constrained_examples(ud):
    assert longest_constrained([1, 3, 2], ud, IndexConstraint(forced={2})).length == 3
    with pytest.raises(InfeasibleConstraint):
        longest_constrained([1, 2, 3], ud, IndexConstraint(forced={1, 2, 3}))
    x = np.random.default_rng(0).random(30)
    assert longest_constrained(x, ud, IndexConstraint()) == longest(x, ud)


def test_constraint_validation(ud):
    with pytest.raises(ValueError, match="both forced and forbidden"):
        IndexConstraint(forced={1}, forbidden={1})
    with pytest.raises(IndexError):
        longest_constrained([1, 2], ud, IndexConstraint(forced={3}))


def constrained_bruteforce(x, p, forced, forbidden):
    best = -1 if forced else 0
    for size in range(len(x) + 1):
        for combo in itertools.combinations(range(1, len(x) + 1), size):
            if forbidden & set(combo) or not forced <= set(combo):
                continue
            if follows(x[np.array(combo, dtype=int) - 1], p):
                best = max(best, size)
    return best


@pytest.mark.parametrize("text", ["UD", "UDD", CONST3])
def test_constrained_matches_bruteforce(text):
    p = parse_pattern(text)
    rng = np.random.default_rng(5)
    for _ in range(60):
        n = int(rng.integers(1, 9))
        x = rng.random(n)
        labels = rng.integers(0, 5, n)
        forced = {i + 1 for i in range(n) if labels[i] == 0}
        forbidden = {i + 1 for i in range(n) if labels[i] == 1}
        expected = constrained_bruteforce(x, p, forced, forbidden)
        c = IndexConstraint(forced=forced, forbidden=forbidden)
        if expected < 0:
            with pytest.raises(InfeasibleConstraint):
                longest_constrained(x, p, c)
        else:
            res = longest_constrained(x, p, c)
            assert res.length == expected
            assert forced <= set(res.witness) and not forbidden & set(res.witness)


def test_forbidding_a_necessary_index_decreases(ud):
    # index 2 is in every optimum of (1, 3, 2)
    assert longest_constrained([1, 3, 2], ud, IndexConstraint(forbidden={2})).length == 2


def test_interval(ud):
    rng = np.random.default_rng(2)
    for _ in range(100):
        x = rng.random(12)
        a = int(rng.integers(1, 13))
        b = int(rng.integers(a - 1, 13))
        res = longest_on_interval(x, ud, a, b)
        assert res.length == longest_bruteforce(x[a - 1:b], ud).length
        assert all(a <= i <= b for i in res.witness)
    assert longest_on_interval(x, ud, 1, 12) == longest(x, ud)
    assert longest_on_interval(x, ud, 5, 4).length == 0
    with pytest.raises(IndexError):
        longest_on_interval(x, ud, 0, 3)
    with pytest.raises(IndexError):
        longest_on_interval(x, ud, 3, 13)


pattern_st = st.sampled_from([parse_pattern(t) for t in PATTERNS])
seq_st = st.lists(st.floats(0, 1, allow_nan=False), max_size=10)


@settings(max_examples=150, deadline=None)
@given(pattern_st, seq_st, st.floats(0, 1))
def test_appending_never_shortens(p, xs, extra):
    assert longest(xs + [extra], p).length >= longest(xs, p).length


@settings(max_examples=150, deadline=None)
@given(pattern_st, seq_st)
def test_length_lower_bound(p, xs):
    assert longest(xs, p).length >= min(len(xs), p.r - 1)


@settings(max_examples=150, deadline=None)
@given(pattern_st, st.lists(st.floats(0, 1), max_size=10, unique=True))
def test_order_invariance_of_length(p, xs):
    x = np.array(xs)
    assert longest(x ** 3 + 2 * x, p).length == longest(x, p).length
    assert longest(np.argsort(np.argsort(x)) + 1, p).length == longest(x, p).length


def test_ud_superadditivity_exhaustive(ud):
    # all order types of a, b following UD with |a| + |b| <= 8
    for m in range(2, 9):
        for perm in itertools.permutations(range(1, m + 1)):
            glued = None
            for s in range(1, m):
                if follows(perm[:s], ud) and follows(perm[s:], ud):
                    if glued is None:
                        glued = longest(perm, ud).length
                    assert glued >= m - ud.k


@settings(max_examples=60, deadline=None)
@given(pattern_st, st.lists(st.floats(0, 1), min_size=1, max_size=10, unique=True))
def test_forbidding_an_unused_index_keeps_optimum(p, xs):
    res = longest(xs, p)
    for i in range(1, len(xs) + 1):
        dropped = longest_constrained(xs, p, IndexConstraint(forbidden={i})).length
        assert dropped <= res.length
        if i not in res.witness:
            assert dropped == res.length
