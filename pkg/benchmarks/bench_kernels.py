"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from patternclt.kernels import get_backend
from patternclt.patterns import parse_pattern

CASES = [
    ("UD", "lps2_lengths", 64, 1000),
    ("UUDD", "lps2_lengths", 64, 1000),
    ("r=3; 0:123,231,312; 1:123,231,312; 2:123,231,312", "lps_states_lengths", 8, 120),
    ("U", "lps_bruteforce", 200, 14),
]


def call(mod, kind, p, mat):
    if kind == "lps2_lengths":
        up, down = p.steps
        return mod.lps2_lengths(mat, up, down)
    if kind == "lps_states_lengths":
        return mod.lps_states_lengths(mat, p.r, p.table)
    return [mod.lps_bruteforce(row, p.r, p.table)[0] for row in mat]


def best_time(fn, repeat):
    out = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out = min(out, time.perf_counter() - t)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    nb, npk = get_backend("numba"), get_backend("numpy")
    rng = np.random.default_rng(0)
    print(f"{'pattern':<12} {'kernel':<20} {'rows x n':>10} {'numba s':>10} {'numpy s':>10} {'speedup':>8}")
    for text, kind, rows, n in CASES:
        p = parse_pattern(text)
        mat = rng.random((rows, n))
        a = np.asarray(call(nb, kind, p, mat))  # compile outside the timing
        b = np.asarray(call(npk, kind, p, mat))
        assert np.array_equal(a, b), f"backends disagree on {text}"
        t_nb = best_time(lambda: call(nb, kind, p, mat), args.repeat)
        t_np = best_time(lambda: call(npk, kind, p, mat), args.repeat)
        label = text if len(text) <= 12 else "const-3"
        print(f"{label:<12} {kind:<20} {f'{rows}x{n}':>10} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>7.0f}x")


if __name__ == "__main__":
    main()
