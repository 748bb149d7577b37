"""Renewal decomposition of the longest following length at event blocks.

A sample of ``4k * n`` uniforms is cut into blocks of ``4k`` coordinates. A
block is an *event* when every coordinate falls in its cell of the cube B:
four copies of tau, each value ``tau(i)`` mapped to a cell of the unit
interval. Events act as regeneration points; the longest subsequence splits
at their midpoints into independent segment lengths plus two boundary terms.

Indexing
--------
``d[j - 1]`` is the indicator for block j (1-based), which covers coordinates
``(4k(j-1), 4kj]``. Event *positions* ``p`` are 0-based block offsets, so the
event at position ``p`` covers ``(4kp, 4kp + 4k]``, its midpoint is
``4kp + 2k`` and its middle 2k coordinates are ``(4kp + k, 4kp + 3k]``.
``D[m]`` counts events in blocks 1..m, i.e. at positions ``0..m-1``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import TauWitness, find_tau_witness
from .patterns import Pattern, follows
from .subsequence import (IndexConstraint, InfeasibleConstraint, longest,
                          longest_constrained, longest_slice)

MODES = ("paper", "fat")


class NoWitnessError(ValueError):
    """The pattern has no tau whose powers follow it."""


@dataclass(frozen=True, eq=False)
class BlockConfig:
    pattern: Pattern
    tau: TauWitness
    mode: str
    lo: np.ndarray  # cell lower ends, one per position of a tau copy
    hi: np.ndarray

    @property
    def k(self) -> int:
        return self.pattern.k

    @property
    def block_len(self) -> int:
        return 4 * self.k

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo)) ** 4

    @property
    def block_lo(self) -> np.ndarray:
        return np.tile(self.lo, 4)

    @property
    def block_hi(self) -> np.ndarray:
        return np.tile(self.hi, 4)

    def midpoints(self) -> np.ndarray:
        return (self.block_lo + self.block_hi) / 2

    def cells(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.lo, self.hi)]

    def in_cells(self, blocks: np.ndarray) -> np.ndarray:
        """Event indicator for each row of a ``(m, 4k)`` array."""
        lo, hi = self.block_lo, self.block_hi
        if self.mode == "paper":
            inside = (blocks >= lo) & (blocks <= hi)
        else:
            inside = (blocks >= lo) & (blocks < hi)
        return inside.all(axis=1)

    def draw_event(self, rng: np.random.Generator) -> np.ndarray:
        """A uniform point of B (coordinates are independent, so per-cell uniform)."""
        return self.block_lo + (self.block_hi - self.block_lo) * rng.random(self.block_len)


def make_block_config(pattern: Pattern, mode: str = "paper") -> BlockConfig:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    tau = find_tau_witness(pattern)
    if tau is None:
        reason = ""
        if pattern.r > pattern.k:
            # every window of a tau power then repeats a value
            reason = f" (r={pattern.r} > k={pattern.k}, so powers of tau always tie)"
        raise NoWitnessError(f"no tau witness for pattern {pattern}{reason}")
    k = pattern.k
    t = np.asarray(tau.tau, dtype=np.float64)
    if mode == "paper":
        lo = t / k - 2 / (3 * k)
        hi = lo + 1 / (3 * k)
    else:
        lo = (t - 1) / k
        hi = t / k
    cfg = BlockConfig(pattern, tau, mode, lo, hi)
    if not follows(cfg.midpoints(), pattern):
        raise ValueError(f"cell midpoints of tau={tau.tau} do not follow {pattern}")
    return cfg


@dataclass
class EventScan:
    n_blocks: int
    d: np.ndarray  # bool, d[j-1] is block j
    p: np.ndarray  # 0-based event positions
    q: np.ndarray  # gaps p[j] - p[j-1], j >= 1 (q[0] is q_1)
    D: np.ndarray  # D[m] = events among blocks 1..m, m = 0..n_blocks
    Q: np.ndarray  # Q[m] = q_1 + ... + q_m, m = 0..len(q)
    block_len: int
    pattern: Pattern

    def D_at(self, m: int) -> int:
        return int(self.D[m])

    def first_event_from(self, n: int) -> int | None:
        """Position of the first event at position >= n, if scanned."""
        idx = self.D_at(n) if n <= self.n_blocks else int(self.D[-1])
        return int(self.p[idx]) if idx < self.p.size else None


def scan_events(sample, cfg: BlockConfig) -> EventScan:
    x = np.asarray(sample, dtype=np.float64)
    if x.size % cfg.block_len:
        raise ValueError(
            f"sample length {x.size} is not a multiple of the block length {cfg.block_len}"
        )
    n = x.size // cfg.block_len
    d = cfg.in_cells(x.reshape(n, cfg.block_len)) if n else np.zeros(0, dtype=bool)
    p = np.flatnonzero(d).astype(np.int64)
    q = np.diff(p)
    D = np.concatenate([[0], np.cumsum(d)]).astype(np.int64)
    Q = np.concatenate([[0], np.cumsum(q)]).astype(np.int64)
    return EventScan(n, d, p, q, D, Q, cfg.block_len, cfg.pattern)


def sample_with_planted_events(n_blocks: int, plant_at, cfg: BlockConfig, seed) -> np.ndarray:
    """iid uniforms with events forced at the given 1-based blocks."""
    plant = sorted(set(int(j) for j in plant_at))
    if len(plant) != len(list(plant_at)):
        raise ValueError("plant indices must be distinct")
    for j in plant:
        if not 1 <= j <= n_blocks:
            raise IndexError(f"plant index {j} outside blocks 1..{n_blocks}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = rng.random(n_blocks * cfg.block_len)
    L = cfg.block_len
    for j in plant:
        x[(j - 1) * L:j * L] = cfg.draw_event(rng)
    return x


def extend_sample(sample, cfg: BlockConfig, rng, n: int, events_needed: int,
                  chunk: int = 64, plant_tail: bool = False, max_blocks: int = 10**7):
    """Append iid blocks until an event sits at position >= n and
    at least ``events_needed`` events exist in total.

    With ``plant_tail`` every appended chunk ends in a planted event, which
    keeps paper-mode runs finite.
    """
    x = np.asarray(sample, dtype=np.float64)
    L = cfg.block_len
    scan = scan_events(x, cfg)
    while scan.p.size < events_needed or scan.first_event_from(n) is None:
        if scan.n_blocks >= max_blocks:
            raise RuntimeError(f"no event within {max_blocks} blocks")
        extra = rng.random(chunk * L)
        if plant_tail:
            extra[-L:] = cfg.draw_event(rng)
        x = np.concatenate([x, extra])
        scan = scan_events(x, cfg)
    return x, scan


@dataclass
class SegmentStats:
    s: np.ndarray  # s[j-1] = s_j
    q: np.ndarray
    S: np.ndarray  # S[m] = s_1 + ... + s_m
    t: np.ndarray | None = None
    T: np.ndarray | None = None
    bound_violations: list[int] = field(default_factory=list)


def segment_lengths(sample, scan: EventScan, cfg: BlockConfig, mu_s: float | None = None,
                    count: int | None = None) -> SegmentStats:
    """Longest following lengths between consecutive event midpoints.

    Segment j covers ``(4k p[j-1] + 2k, 4k p[j] + 2k]``. With ``mu_s`` given,
    also centres them as ``t_j = s_j - mu_s * vol(B) * q_j``.
    """
    if scan.p.size < 2:
        raise ValueError(f"need at least 2 events for a segment, found {scan.p.size}")
    x = np.asarray(sample, dtype=np.float64)
    L, half = cfg.block_len, cfg.block_len // 2
    count = scan.p.size - 1 if count is None else count
    if count > scan.p.size - 1:
        raise ValueError(f"only {scan.p.size - 1} segments available, asked for {count}")
    s = np.empty(count, dtype=np.int64)
    for j in range(1, count + 1):
        a = L * scan.p[j - 1] + half + 1
        b = L * scan.p[j] + half
        s[j - 1] = longest_slice(x, cfg.pattern, a, b).length
    q = scan.q[:count]
    viol = [j + 1 for j in range(count) if not L <= s[j] <= L * q[j]]
    stats = SegmentStats(s, q, np.concatenate([[0], np.cumsum(s)]), bound_violations=viol)
    if mu_s is not None:
        stats.t = s - mu_s * cfg.volume * q
        stats.T = np.concatenate([[0.0], np.cumsum(stats.t)])
    return stats


@dataclass
class DecompositionTerms:
    n: int
    D_n: int
    term1: int
    term2: float
    term3: float
    term3_case: str  # "floor<=D" or "floor>D"
    term4: float
    term5: int
    S_Dn: int
    R_total: int
    lemma1_p0: int  # longest over (4k p_0 + 2k, 4k p_{D_n} + 2k]
    lemma1_p1: int | None  # same from p_1, the literal reading
    R_prefix: int  # longest over [1, 4k p_{D_n} + 2k]

    @property
    def identity_ok(self) -> bool:
        return self.term1 + self.S_Dn + self.term5 == self.R_total

    @property
    def terms_sum(self) -> float:
        return self.term1 + self.term2 + self.term3 + self.term4 + self.term5

    @property
    def lemma1_ok(self) -> bool:
        return self.lemma1_p0 == self.S_Dn

    @property
    def discrepancy(self) -> int:
        """R_total minus term1 + S_{D_n} + term5; zero when the identity holds."""
        return self.R_total - (self.term1 + self.S_Dn + self.term5)

    @property
    def prefix_ok(self) -> bool:
        """Cut at event midpoints only: R over [1, 4k p_{D_n} + 2k] = term1 + S_{D_n}."""
        return self.R_prefix == self.term1 + self.S_Dn

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "D_n": self.D_n,
            "terms": [self.term1, self.term2, self.term3, self.term4, self.term5],
            "term3_case": self.term3_case,
            "S_Dn": self.S_Dn,
            "R_total": self.R_total,
            "terms_sum": self.terms_sum,
            "identity_ok": self.identity_ok,
            "discrepancy": self.discrepancy,
            "R_prefix": self.R_prefix,
            "prefix_ok": self.prefix_ok,
            "lemma1_p0": self.lemma1_p0,
            "lemma1_p1": self.lemma1_p1,
            "lemma1_ok": self.lemma1_ok,
        }


def lemma2_terms(sample, scan: EventScan, seg: SegmentStats, mu_s: float, mu_d: float,
                 n: int) -> DecompositionTerms:
    """The five summands for the longest length over the first ``n`` blocks.

    ``seg`` must hold centred segments up to ``max(D_n, floor(mu_d n))``.
    Terms 2-4 add up to ``S_{D_n}`` for any ``mu_s``, so ``identity_ok``
    compares exact integers.
    """
    x = np.asarray(sample, dtype=np.float64)
    pattern = scan.pattern
    L = scan.block_len
    half = L // 2
    if n > scan.n_blocks:
        raise ValueError(f"sample has {scan.n_blocks} blocks, fewer than n = {n}")
    D_n = scan.D_at(n)
    if D_n < 1:
        raise ValueError("no event among the first n blocks (D_n = 0)")
    p_next = scan.first_event_from(n)
    if p_next is None:
        raise ValueError("no event at or after position n; extend the sample")
    floor_mu = int(math.floor(mu_d * n))
    need = max(D_n, floor_mu)
    if seg.T is None or seg.T.size - 1 < need:
        raise ValueError(f"need centred segments up to j = {need}")
    p0 = int(scan.p[0])
    R_total = longest_slice(x, pattern, 1, L * n).length
    term1 = longest_slice(x, pattern, 1, L * p0 + half).length
    term2 = float(seg.T[floor_mu])
    if floor_mu <= D_n:
        term3, case = float(seg.T[D_n] - seg.T[floor_mu]), "floor<=D"
    else:
        term3, case = -float(seg.T[floor_mu] - seg.T[D_n]), "floor>D"
    term4 = mu_s * mu_d * float(scan.Q[D_n])
    term5 = -longest_slice(x, pattern, L * n + 1, L * p_next + half).length
    lemma1_p0 = longest_slice(x, pattern, L * p0 + half + 1, L * p_next + half).length
    lemma1_p1 = None
    if D_n >= 2:
        p1 = int(scan.p[1])
        lemma1_p1 = longest_slice(x, pattern, L * p1 + half + 1, L * p_next + half).length
    R_prefix = longest_slice(x, pattern, 1, L * p_next + half).length
    return DecompositionTerms(n, D_n, term1, term2, term3, case, term4, term5,
                             int(seg.S[D_n]), R_total, lemma1_p0, lemma1_p1, R_prefix)


@dataclass
class GluingReport:
    event: int
    middle: tuple[int, ...]
    optimum: int
    forced_optimum: int | None
    forbidden_optima: dict
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "event": self.event,
            "middle": list(self.middle),
            "optimum": self.optimum,
            "forced_optimum": self.forced_optimum,
            "forbidden_optima": {str(m): v for m, v in self.forbidden_optima.items()},
            "ok": self.ok,
            "violations": self.violations,
        }


def gluing_check(sample, scan: EventScan, cfg: BlockConfig, j: int) -> GluingReport:
    """Check that optimal subsequences pass through the middle of event ``p[j]``.

    (a) forcing the middle 2k indices keeps the optimum; (b) forbidding any one
    of them lowers it. Failures are recorded, never raised.
    """
    x = np.asarray(sample, dtype=np.float64)
    pos = int(scan.p[j])
    k = cfg.k
    base = 4 * k * pos
    middle = tuple(range(base + k + 1, base + 3 * k + 1))
    best = longest(x, cfg.pattern).length
    violations = []
    try:
        forced = longest_constrained(x, cfg.pattern, IndexConstraint(forced=middle)).length
    except InfeasibleConstraint:
        forced = None
    if forced != best:
        violations.append(
            f"forcing middle {middle[0]}..{middle[-1]} gives {forced}, optimum is {best}"
        )
    dropped = {}
    for m in middle:
        dropped[m] = longest_constrained(x, cfg.pattern, IndexConstraint(forbidden={m})).length
        if dropped[m] >= best:
            violations.append(f"forbidding index {m} keeps length {dropped[m]} (optimum {best})")
    return GluingReport(j, middle, best, forced, dropped, violations)


def estimate_mu_s(cfg: BlockConfig, segments: int = 1000, seed: int = 0) -> tuple[float, float]:
    """Pilot mean of s_j and its standard error from natural events.

    Only fat mode has events frequent enough; paper-mode configs are
    estimated on the fat geometry of the same pattern.
    """
    if cfg.mode != "fat":
        cfg = make_block_config(cfg.pattern, "fat")
    rng = np.random.default_rng(seed)
    x, scan = extend_sample(np.empty(0), cfg, rng, 0, segments + 1,
                            chunk=max(64, int(4 / cfg.volume)))
    seg = segment_lengths(x, scan, cfg, count=segments)
    return float(seg.s.mean()), float(seg.s.std(ddof=1) / math.sqrt(segments))


@dataclass
class DecompositionRun:
    cfg: BlockConfig
    n: int
    sample: np.ndarray
    scan: EventScan
    seg: SegmentStats | None
    terms: DecompositionTerms | None
    mu_s: float

    @property
    def identity_ok(self) -> bool | None:
        return None if self.terms is None else self.terms.identity_ok

    def summary(self) -> dict:
        out = {
            "mode": self.cfg.mode,
            "pattern": str(self.cfg.pattern),
            "tau": list(self.cfg.tau.tau),
            "volume": self.cfg.volume,
            "n": self.n,
            "D_n": self.scan.D_at(self.n),
            "mu_s": self.mu_s,
            "segment_bound_violations": [] if self.seg is None else self.seg.bound_violations,
        }
        if self.terms is None:
            out.update(terms=None, identity_ok=None)
        else:
            out.update(self.terms.to_dict())
        return out


def decompose(cfg: BlockConfig, n: int, seed, mu_s: float, plant_at=(),
              plant_tail: bool | None = None) -> DecompositionRun:
    """Draw a sample, extend it past block n, and compute all terms.

    ``plant_at`` holds 1-based blocks within the first n. When no event falls
    in the first n blocks the run carries ``terms = None``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if plant_tail is None:
        plant_tail = cfg.mode == "paper"
    x = sample_with_planted_events(n, plant_at, cfg, rng)
    scan = scan_events(x, cfg)
    D_n = scan.D_at(n)
    if D_n == 0:
        return DecompositionRun(cfg, n, x, scan, None, None, mu_s)
    need = max(D_n, int(math.floor(cfg.volume * n))) + 1
    chunk = 8 if plant_tail else max(64, int(2 / cfg.volume))
    x, scan = extend_sample(x, cfg, rng, n, need, chunk=chunk, plant_tail=plant_tail)
    seg = segment_lengths(x, scan, cfg, mu_s=mu_s, count=need - 1)
    terms = lemma2_terms(x, scan, seg, mu_s, cfg.volume, n)
    return DecompositionRun(cfg, n, x, scan, seg, terms, mu_s)


def waiting_time(cfg: BlockConfig, n: int, rng) -> int:
    """Blocks from position n to the first event at or after it."""
    x = rng.random(n * cfg.block_len)
    _, scan = extend_sample(x, cfg, rng, n, 0, chunk=max(64, int(1 / cfg.volume)))
    return scan.first_event_from(n) - n


def write_trace_csv(path, scan: EventScan, seg: SegmentStats | None) -> None:
    """Rows (j, d_j, p_j, q_j, s_j, t_j); blank where a quantity is undefined."""
    rows = max(scan.n_blocks, scan.p.size) + 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "d_j", "p_j", "q_j", "s_j", "t_j"])
        for j in range(rows):
            d = int(scan.d[j - 1]) if 1 <= j <= scan.n_blocks else ""
            p = int(scan.p[j]) if j < scan.p.size else ""
            q = int(scan.q[j - 1]) if 1 <= j <= scan.q.size else ""
            s = t = ""
            if seg is not None and 1 <= j <= seg.s.size:
                s = int(seg.s[j - 1])
                if seg.t is not None:
                    t = repr(float(seg.t[j - 1]))
            w.writerow([j, d, p, q, s, t])
