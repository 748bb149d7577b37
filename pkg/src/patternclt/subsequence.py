"""Longest subsequence following a pattern, exact.

Indices in results and constraints are 1-based, matching how positions of a
sequence are usually written; the kernels work 0-based underneath.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .patterns import Pattern, as_values

BRUTEFORCE_MAX_N = 22


class InfeasibleConstraint(ValueError):
    """No following subsequence contains all forced indices."""


@dataclass(frozen=True)
class SubseqResult:
    length: int
    witness: tuple[int, ...] = ()


@dataclass(frozen=True)
class IndexConstraint:
    forced: frozenset = field(default_factory=frozenset)
    forbidden: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "forced", frozenset(self.forced))
        object.__setattr__(self, "forbidden", frozenset(self.forbidden))
        both = self.forced & self.forbidden
        if both:
            raise ValueError(f"indices both forced and forbidden: {sorted(both)}")

    def masks(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        forced = np.zeros(n, dtype=np.bool_)
        forbidden = np.zeros(n, dtype=np.bool_)
        for name, idx, mask in (("forced", self.forced, forced), ("forbidden", self.forbidden, forbidden)):
            for i in idx:
                if not 1 <= i <= n:
                    raise IndexError(f"{name} index {i} outside 1..{n}")
                mask[i - 1] = True
        return forced, forbidden


def _solve(vals: np.ndarray, pattern: Pattern, forced, forbidden):
    if pattern.r == 2:
        up, down = pattern.steps
        return kernels.lps2(vals, up, down, forbidden, forced)
    return kernels.lps_states(vals, pattern.r, pattern.table, forbidden, forced)


def _result(length, wit, offset=0) -> SubseqResult:
    return SubseqResult(int(length), tuple(int(i) + 1 + offset for i in wit))


def longest(seq, pattern: Pattern) -> SubseqResult:
    vals = as_values(seq)
    none = np.zeros(vals.size, dtype=np.bool_)
    return _result(*_solve(vals, pattern, none, none))


def longest_constrained(seq, pattern: Pattern, c: IndexConstraint) -> SubseqResult:
    """Longest following subsequence using every forced and no forbidden index.

    Raises InfeasibleConstraint when the forced indices cannot all be kept.
    """
    vals = as_values(seq)
    forced, forbidden = c.masks(vals.size)
    length, wit = _solve(vals, pattern, forced, forbidden)
    if length < 0:
        raise InfeasibleConstraint(
            f"no subsequence following {pattern} contains indices {sorted(c.forced)}"
        )
    return _result(length, wit)


def longest_on_interval(seq, pattern: Pattern, a: int, b: int) -> SubseqResult:
    """Longest following subsequence using only indices in ``[a, b]``.

    The window phase is counted along the chosen subsequence, so the slice is
    solved as a sequence in its own right.
    """
    vals = as_values(seq)
    n = vals.size
    if not (1 <= a <= b + 1 <= n + 1):
        raise IndexError(f"interval [{a}, {b}] outside 1..{n}")
    return longest_slice(vals, pattern, a, b)


def longest_slice(vals: np.ndarray, pattern: Pattern, a: int, b: int) -> SubseqResult:
    # no validation or conversion; callers in hot loops pass float64 already
    sub = vals[a - 1:b]
    none = np.zeros(sub.size, dtype=np.bool_)
    length, wit = _solve(sub, pattern, none, none)
    return _result(length, wit, offset=a - 1)


def longest_bruteforce(seq, pattern: Pattern) -> SubseqResult:
    """Reference answer by trying every index subset, largest first."""
    vals = as_values(seq)
    if vals.size > BRUTEFORCE_MAX_N:
        raise ValueError(
            f"brute force limited to n <= {BRUTEFORCE_MAX_N}, got n = {vals.size}"
        )
    return _result(*kernels.lps_bruteforce(vals, pattern.r, pattern.table))


def longest_lengths(rows, pattern: Pattern) -> np.ndarray:
    """Lengths only, for a 2-D array with one sequence per row."""
    mat = np.ascontiguousarray(rows, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError("expected a 2-D array of sequences")
    if pattern.r == 2:
        up, down = pattern.steps
        return kernels.lps2_lengths(mat, up, down)
    return kernels.lps_states_lengths(mat, pattern.r, pattern.table)
