"""Sampling, exact enumeration and CLT statistics for longest-subsequence lengths."""
from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .patterns import Pattern, format_pattern
from .subsequence import longest_lengths

EXACT_MAX_N = 9
KS_MIN_SIZE = 50
MODELS = ("uniform", "permutation")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial, from a BLAKE2b mix of (seed, trial)."""
    digest = hashlib.blake2b(f"{seed}:{trial}".encode(), digest_size=16).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def sample_permutation(n: int, seed) -> np.ndarray:
    """Uniform permutation of 1..n (numpy's Fisher-Yates shuffle)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.permutation(n).astype(np.int64) + 1


def sample_uniform_seq(n: int, seed) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.random(n)


def rank_reduce(values) -> np.ndarray:
    """Ranks 1..n of tie-free values."""
    return np.argsort(np.argsort(values, kind="stable"), kind="stable") + 1


def exact_distribution(pattern: Pattern, n: int) -> dict[int, int]:
    """Count permutations of 1..n by their longest following length."""
    if not 0 <= n <= EXACT_MAX_N:
        raise ValueError(f"exact enumeration needs 0 <= n <= {EXACT_MAX_N}, got {n}")
    if n == 0:
        return {0: 1}
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.float64)
    lengths = longest_lengths(perms, pattern)
    values, counts = np.unique(lengths, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


def distribution_moments(dist: dict[int, int]) -> tuple[float, float]:
    """Mean and (population) variance of a count distribution."""
    total = sum(dist.values())
    mean = sum(v * c for v, c in dist.items()) / total
    var = sum(c * (v - mean) ** 2 for v, c in dist.items()) / total
    return mean, var


@dataclass
class TrialBatch:
    pattern: str
    n: int
    seed: int
    model: str
    lengths: np.ndarray
    start: int = 0

    @property
    def trials(self) -> int:
        return int(self.lengths.size)

    def merge(self, other: "TrialBatch") -> "TrialBatch":
        """Concatenate a batch that continues this one's trial indices."""
        same = (self.pattern, self.n, self.seed, self.model) == (
            other.pattern, other.n, other.seed, other.model)
        if not same:
            raise ValueError("can only merge batches of the same experiment")
        if other.start != self.start + self.trials:
            raise ValueError(
                f"batch starting at trial {other.start} does not continue "
                f"trials {self.start}..{self.start + self.trials - 1}"
            )
        return TrialBatch(self.pattern, self.n, self.seed, self.model,
                          np.concatenate([self.lengths, other.lengths]), self.start)

    def moments(self) -> "Moments":
        return Moments.of(self.lengths)


def _draw_rows(n, seed, first, count, model):
    rows = np.empty((count, n), dtype=np.float64)
    for i in range(count):
        rng = trial_rng(seed, first + i)
        if model == "uniform":
            rows[i] = rng.random(n)
        else:
            rows[i] = rng.permutation(n) + 1
    return rows


def run_trials(pattern: Pattern, n: int, trials: int, seed: int,
               model: str = "uniform", start: int = 0, threads: int = 1,
               chunk: int = 256) -> TrialBatch:
    """Longest following lengths for ``trials`` independent samples of size n.

    Trial ``i`` draws from ``trial_rng(seed, start + i)`` whatever the chunking
    or thread count, so results depend only on the arguments.
    """
    if trials < 0:
        raise ValueError("trials must be nonnegative")
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    text = format_pattern(pattern)
    if trials == 0:
        return TrialBatch(text, n, seed, model, np.empty(0, dtype=np.int64), start)

    def work(first):
        count = min(chunk, start + trials - first)
        return longest_lengths(_draw_rows(n, seed, first, count, model), pattern)

    firsts = range(start, start + trials, chunk)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, firsts))
    else:
        parts = [work(f) for f in firsts]
    return TrialBatch(text, n, seed, model, np.concatenate(parts), start)


@dataclass
class Moments:
    """Streaming count/mean/M2 accumulator with an associative merge."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values) -> "Moments":
        x = np.asarray(values, dtype=np.float64)
        if x.size == 0:
            return cls()
        mean = float(x.mean())
        return cls(int(x.size), mean, float(((x - mean) ** 2).sum()))

    def push(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def merge(self, other: "Moments") -> "Moments":
        if other.count == 0:
            return Moments(self.count, self.mean, self.m2)
        if self.count == 0:
            return Moments(other.count, other.mean, other.m2)
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return Moments(count, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else math.nan


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic survival function of the Kolmogorov distribution."""
    if lam < 1e-8:
        return 1.0
    if lam < 0.2:
        # the alternating series converges too slowly here; the tail is ~1
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = (-1) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-16:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_normality(sample) -> tuple[float, float]:
    """One-sample KS test against the standard normal CDF.

    The p-value uses the asymptotic law with the finite-size factor
    sqrt(N) + 0.12 + 0.11 / sqrt(N).
    """
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = x.size
    if n < KS_MIN_SIZE:
        raise ValueError(f"KS test needs at least {KS_MIN_SIZE} values, got {n}")
    cdf = ndtr(x)
    d_plus = np.max(np.arange(1, n + 1) / n - cdf)
    d_minus = np.max(cdf - np.arange(n) / n)
    d = float(max(d_plus, d_minus))
    en = math.sqrt(n)
    return d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)


@dataclass
class CltEstimate:
    grid: list[int]
    means: list[float]
    variances: list[float]
    mean_slope: float
    mean_intercept: float
    var_slope: float
    var_intercept: float
    n_max: int
    standardized: np.ndarray = field(repr=False)
    ks_statistic: float
    ks_p_value: float

    def summary(self) -> dict:
        return {
            "grid": self.grid,
            "means": self.means,
            "variances": self.variances,
            "mean_slope": self.mean_slope,
            "mean_intercept": self.mean_intercept,
            "var_slope": self.var_slope,
            "var_intercept": self.var_intercept,
            "n_max": self.n_max,
            "ks_statistic": self.ks_statistic,
            "ks_p_value": self.ks_p_value,
        }


def fit_line(x, y) -> tuple[float, float]:
    """Least-squares slope and intercept."""
    slope, intercept = np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)
    return float(slope), float(intercept)


def estimate_clt(batches: list[TrialBatch]) -> CltEstimate:
    """Fit per-element mean and variance slopes over an n-grid.

    Batches with the same n are merged. The sample at the largest n is
    standardized as (L - mean_slope * n) / sqrt(var_slope * n).
    """
    by_n: dict[int, list[np.ndarray]] = {}
    for b in batches:
        by_n.setdefault(b.n, []).append(b.lengths)
    grid = sorted(by_n)
    if len(grid) < 3:
        raise ValueError(f"need at least 3 distinct n values, got {grid}")
    pooled = {n: np.concatenate(by_n[n]).astype(np.float64) for n in grid}
    if any(v.size < 2 for v in pooled.values()):
        raise ValueError("every grid point needs at least 2 trials")
    means = [float(pooled[n].mean()) for n in grid]
    variances = [float(pooled[n].var(ddof=1)) for n in grid]
    mu, mu0 = fit_line(grid, means)
    s2, s20 = fit_line(grid, variances)
    n_max = grid[-1]
    if s2 > 0:
        z = (pooled[n_max] - mu * n_max) / math.sqrt(s2 * n_max)
    else:
        z = np.full(pooled[n_max].size, np.nan)
    if s2 > 0 and z.size >= KS_MIN_SIZE:
        ks_d, ks_p = ks_normality(z)
    else:
        ks_d, ks_p = math.nan, math.nan
    return CltEstimate(grid, means, variances, mu, mu0, s2, s20, n_max, z, ks_d, ks_p)


def standardize_affine(lengths, n: int, est: CltEstimate, seed: int | None = None) -> np.ndarray:
    """Standardize with the fitted intercepts kept, optionally de-latticed.

    Uses (L + U - (mean_slope n + mean_intercept)) / sqrt(var_slope n + var_intercept).
    With ``seed`` given, U is uniform on (-1/2, 1/2) from that seed, which
    spreads each integer value over a unit interval so the KS distance does
    not see the lattice jumps; otherwise U = 0.
    """
    x = np.asarray(lengths, dtype=np.float64)
    if seed is not None:
        x = x + np.random.default_rng(seed).uniform(-0.5, 0.5, x.size)
    var = est.var_slope * n + est.var_intercept
    if var <= 0:
        raise ValueError(f"fitted variance at n = {n} is not positive ({var})")
    return (x - (est.mean_slope * n + est.mean_intercept)) / math.sqrt(var)
