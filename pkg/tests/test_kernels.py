import numpy as np
import pytest

from patternclt.kernels import get_backend
from patternclt.patterns import parse_pattern

from conftest import CONST3

nb = get_backend("numba")
npk = get_backend("numpy")

TEXTS = ["U", "UD", "UDD", "UUDD", "r=2; 0:12,21; 1:21", CONST3, "r=3; 0:132,213; 1:123"]


def test_unknown_backend():
    with pytest.raises(ValueError, match="unknown backend"):
        get_backend("fortran")


def test_window_codes_agree():
    rng = np.random.default_rng(0)
    x = rng.integers(0, 5, 40).astype(float)
    for r in (2, 3, 4):
        assert np.array_equal(nb.window_codes(x, r), npk.window_codes(x, r))


@pytest.mark.parametrize("text", TEXTS)
def test_backends_agree_with_constraints(text):
    p = parse_pattern(text)
    rng = np.random.default_rng(1)
    for _ in range(80):
        n = int(rng.integers(0, 30))
        x = rng.random(n) if rng.random() < 0.7 else rng.integers(0, 5, n).astype(float)
        labels = rng.integers(0, 12, n)
        forced, forbidden = labels == 0, labels == 1
        if p.r == 2:
            up, down = p.steps
            a = nb.lps2(x, up, down, forbidden, forced)
            b = npk.lps2(x, up, down, forbidden, forced)
        else:
            a = nb.lps_states(x, p.r, p.table, forbidden, forced)
            b = npk.lps_states(x, p.r, p.table, forbidden, forced)
        assert a[0] == b[0]
        assert list(a[1]) == list(b[1])


@pytest.mark.parametrize("text", TEXTS)
def test_batch_lengths_agree(text):
    p = parse_pattern(text)
    mat = np.random.default_rng(2).random((20, 25))
    if p.r == 2:
        up, down = p.steps
        assert np.array_equal(nb.lps2_lengths(mat, up, down), npk.lps2_lengths(mat, up, down))
    else:
        assert np.array_equal(nb.lps_states_lengths(mat, p.r, p.table),
                              npk.lps_states_lengths(mat, p.r, p.table))


@pytest.mark.parametrize("text", TEXTS)
def test_bruteforce_backends_agree(text):
    p = parse_pattern(text)
    rng = np.random.default_rng(3)
    for _ in range(30):
        x = rng.random(int(rng.integers(0, 11)))
        a = nb.lps_bruteforce(x, p.r, p.table)
        b = npk.lps_bruteforce(x, p.r, p.table)
        assert a[0] == b[0] and list(a[1]) == list(b[1])
