"""Bounded combinatoriality check, tau-witness search and a drift probe."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .montecarlo import fit_line, run_trials
from .patterns import Pattern, follows, window_ok
from .subsequence import longest

MAX_BOUND = 10
MAX_TAU_K = 8


@dataclass(frozen=True)
class CombVerdict:
    mode: str  # "pass_up_to_bound" or "counterexample"
    bound: int
    counterexample: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    glued_length: int | None = None
    checked: int = 0  # number of (permutation, split) pairs with both parts following

    @property
    def passed(self) -> bool:
        return self.mode == "pass_up_to_bound"

    def to_dict(self) -> dict:
        out = {"mode": self.mode, "bound": self.bound, "checked_pairs": self.checked}
        if self.counterexample is not None:
            a, b = self.counterexample
            out["counterexample"] = {"a": list(a), "b": list(b), "glued_length": self.glued_length}
        return out


@dataclass(frozen=True)
class TauWitness:
    tau: tuple[int, ...]
    verified_copies: int

    def power(self, m: int) -> np.ndarray:
        return np.tile(np.asarray(self.tau, dtype=np.int64), m)


def _splits_following(perm: np.ndarray, pattern: Pattern) -> list[int]:
    """Split points s (1 <= s < m) with perm[:s] and perm[s:] both following."""
    m = perm.size
    r = pattern.r
    prefix_ok = window_ok(perm, pattern)
    # first bad window bounds which prefixes follow
    bad = np.flatnonzero(~prefix_ok)
    longest_prefix = m if bad.size == 0 else bad[0] + r - 1
    out = []
    for s in range(1, min(longest_prefix, m - 1) + 1):
        if window_ok(perm[s:], pattern).all():
            out.append(s)
    return out


def check_combinatorial(pattern: Pattern, bound: int) -> CombVerdict:
    """Search order types of total size <= bound for a failed gluing.

    A pair (a, b) fails when both follow the pattern but the longest following
    subsequence of a·b is shorter than |a| + |b| - k. Order: increasing size,
    lexicographic permutation, increasing |a|. A pass is evidence only.
    """
    if not 2 <= bound <= MAX_BOUND:
        raise ValueError(f"bound must be in 2..{MAX_BOUND}, got {bound}")
    k = pattern.k
    checked = 0
    for m in range(2, bound + 1):
        for perm_t in itertools.permutations(range(1, m + 1)):
            perm = np.asarray(perm_t, dtype=np.int64)
            splits = _splits_following(perm, pattern)
            if not splits:
                continue
            checked += len(splits)
            glued = longest(perm, pattern).length
            if glued < m - k:
                s = splits[0]
                return CombVerdict("counterexample", bound, (perm_t[:s], perm_t[s:]), glued, checked)
    return CombVerdict("pass_up_to_bound", bound, checked=checked)


def verify_counterexample(pattern: Pattern, a, b) -> bool:
    glued = np.concatenate([np.asarray(a), np.asarray(b)])
    return (follows(a, pattern) and follows(b, pattern)
            and longest(glued, pattern).length < len(a) + len(b) - pattern.k)


def witness_copies(pattern: Pattern) -> int:
    """Copies of tau that expose every window phase: ceil((r-1)/k) + 1."""
    return math.ceil((pattern.r - 1) / pattern.k) + 1


def find_tau_witness(pattern: Pattern) -> TauWitness | None:
    """First tau in lexicographic order whose powers follow the pattern."""
    k = pattern.k
    if k > MAX_TAU_K:
        raise ValueError(f"tau search limited to k <= {MAX_TAU_K}, got k = {k}")
    copies = witness_copies(pattern)
    for tau in itertools.permutations(range(1, k + 1)):
        if follows(np.tile(np.asarray(tau, dtype=np.int64), copies), pattern):
            return TauWitness(tau, copies)
    return None


@dataclass
class DriftReport:
    pattern: str
    n_grid: list[int]
    trials: int
    seed: int
    means: list[float] = field(default_factory=list)
    exponent: float = math.nan
    slope: float = math.nan
    classification: str | None = None

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "n_grid": self.n_grid,
            "trials": self.trials,
            "seed": self.seed,
            "means": self.means,
            "exponent": None if math.isnan(self.exponent) else self.exponent,
            "slope": None if math.isnan(self.slope) else self.slope,
            "classification": self.classification,
        }


def drift_probe(pattern: Pattern, n_grid, trials: int, seed: int, threads: int = 1) -> DriftReport:
    """Monte Carlo growth of the mean longest length over ``n_grid``.

    The exponent is the log-log slope of mean against n; exponents near 1/2
    are labelled "sqrt" and near 1 "linear". The label is advisory.
    """
    grid = [int(n) for n in n_grid]
    report = DriftReport(str(pattern), grid, trials, seed)
    if trials == 0 or not grid:
        return report
    report.means = [float(run_trials(pattern, n, trials, seed, threads=threads).lengths.mean())
                    for n in grid]
    if len(grid) >= 2:
        report.exponent = fit_line(np.log(grid), np.log(report.means))[0]
        report.slope = fit_line(grid, report.means)[0]
        report.classification = "linear" if report.exponent > 0.75 else "sqrt"
    return report
