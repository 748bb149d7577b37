"""Repeating window patterns and the ``follows`` relation.

A pattern of width ``r`` and length ``k`` assigns to every residue mod ``k`` a
nonempty set of permutations of ``1..r``. A sequence follows it when each run
of ``r`` consecutive values is tie-free and its rank vector lies in the set for
that window's offset mod ``k``; the first window has offset 0.

Pattern text comes in two forms::

    UD                                 # width 2: U = (1,2), D = (2,1)
    r=3; 0:123,231,312; 1:123; 2:312   # general: one clause per position
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels

WindowPerm = tuple  # one-line permutation of 1..r, e.g. (3, 1, 2)

UP = (1, 2)
DOWN = (2, 1)

_SHORTHAND = re.compile(r"[UD]+")
_HEADER = re.compile(r"r=(\d+)")
_CLAUSE = re.compile(r"(\d+):(.*)")


class PatternSyntaxError(ValueError):
    """Raised for malformed pattern text."""


class TieError(ValueError):
    """Raised when a window contains two equal values."""


def is_permutation(perm: Sequence[int], r: int) -> bool:
    return len(perm) == r and sorted(perm) == list(range(1, r + 1))


def lehmer_code(perm: Sequence[int]) -> int:
    r = len(perm)
    code = 0
    for a in range(r):
        smaller = sum(1 for b in range(a + 1, r) if perm[b] < perm[a])
        code += smaller * math.factorial(r - 1 - a)
    return code


@dataclass(frozen=True)
class Pattern:
    r: int
    allowed: tuple[frozenset, ...]

    def __post_init__(self):
        if self.r < 2:
            raise ValueError(f"window width must be at least 2, got {self.r}")
        if not self.allowed:
            raise ValueError("pattern needs at least one position")
        for i, perms in enumerate(self.allowed):
            if not perms:
                raise ValueError(f"empty permutation set at position {i}")
            for perm in perms:
                if not is_permutation(perm, self.r):
                    raise ValueError(f"{perm} is not a permutation of 1..{self.r}")

    @classmethod
    def from_sets(cls, r: int, sets: Iterable[Iterable[Sequence[int]]]) -> "Pattern":
        return cls(r, tuple(frozenset(tuple(p) for p in s) for s in sets))

    @property
    def k(self) -> int:
        return len(self.allowed)

    @cached_property
    def table(self) -> np.ndarray:
        """Boolean ``(k, r!)`` lookup: ``table[phase, lehmer_code]``."""
        tab = np.zeros((self.k, math.factorial(self.r)), dtype=np.bool_)
        for ph, perms in enumerate(self.allowed):
            for perm in perms:
                tab[ph, lehmer_code(perm)] = True
        return tab

    @cached_property
    def steps(self) -> tuple[np.ndarray, np.ndarray]:
        """For width 2: per-phase flags (up allowed, down allowed)."""
        if self.r != 2:
            raise ValueError("steps are defined for width-2 patterns only")
        up = np.array([UP in s for s in self.allowed], dtype=np.bool_)
        down = np.array([DOWN in s for s in self.allowed], dtype=np.bool_)
        return up, down

    def is_constant(self) -> bool:
        return all(s == self.allowed[0] for s in self.allowed)

    def __str__(self) -> str:
        return format_pattern(self)


def parse_pattern(text: str) -> Pattern:
    """Parse pattern text; whitespace is ignored."""
    src = "".join(text.split())
    if not src:
        raise PatternSyntaxError("empty pattern text")
    if _SHORTHAND.fullmatch(src):
        return Pattern(2, tuple(frozenset([UP if ch == "U" else DOWN]) for ch in src))
    parts = src.split(";")
    head = _HEADER.fullmatch(parts[0])
    if head is None:
        raise PatternSyntaxError(
            f"expected U/D shorthand or 'r=<width>;...', got clause {parts[0]!r}"
        )
    r = int(head.group(1))
    if not 2 <= r <= 9:
        raise PatternSyntaxError(f"window width r={r} outside 2..9")
    clauses = parts[1:]
    if not clauses:
        raise PatternSyntaxError("no position clauses after the width header")
    sets: dict[int, frozenset] = {}
    for clause in clauses:
        m = _CLAUSE.fullmatch(clause)
        if m is None:
            raise PatternSyntaxError(f"malformed clause {clause!r}; expected POS:PERM,...")
        pos = int(m.group(1))
        if pos in sets:
            raise PatternSyntaxError(f"position {pos} given twice (clause {clause!r})")
        body = m.group(2)
        if not body:
            raise PatternSyntaxError(f"empty permutation set in clause {clause!r}")
        perms = []
        for word in body.split(","):
            if not word.isdigit():
                raise PatternSyntaxError(f"bad permutation {word!r} in clause {clause!r}")
            perm = tuple(int(ch) for ch in word)
            if not is_permutation(perm, r):
                raise PatternSyntaxError(
                    f"{word!r} is not a permutation of 1..{r} (clause {clause!r})"
                )
            perms.append(perm)
        sets[pos] = frozenset(perms)
    k = len(clauses)
    missing = sorted(set(range(k)) - set(sets))
    if missing:
        raise PatternSyntaxError(
            f"position {missing[0]} missing; clauses must cover 0..{k - 1} exactly once"
        )
    return Pattern(r, tuple(sets[i] for i in range(k)))


def format_pattern(p: Pattern) -> str:
    if p.r == 2 and all(len(s) == 1 for s in p.allowed):
        return "".join("U" if UP in s else "D" for s in p.allowed)
    clauses = [
        f"{i}:" + ",".join("".join(map(str, perm)) for perm in sorted(s))
        for i, s in enumerate(p.allowed)
    ]
    return f"r={p.r}; " + "; ".join(clauses)


def as_values(seq) -> np.ndarray:
    """Coerce a sequence to float64 values.

    Integer input (ranks) is embedded as ``x / (n + 1)``, which preserves order.
    """
    arr = np.asarray(seq)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size and np.issubdtype(arr.dtype, np.integer):
        return arr.astype(np.float64) / (arr.size + 1)
    return arr.astype(np.float64)


def window_perm_of(window) -> WindowPerm:
    vals = as_values(window)
    if np.unique(vals).size != vals.size:
        raise TieError(f"tied values in window {tuple(np.asarray(window).tolist())}")
    return tuple(int(x) for x in np.argsort(np.argsort(vals)) + 1)


def window_ok(seq, pattern: Pattern, offset: int = 0) -> np.ndarray:
    """Per-window verdicts for ``seq`` when its first window sits at ``offset``."""
    codes = kernels.window_codes(as_values(seq), pattern.r)
    phases = (np.arange(codes.size) + offset) % pattern.k
    ok = codes >= 0
    ok[ok] = pattern.table[phases[ok], codes[ok]]
    return ok


def follows(seq, pattern: Pattern) -> bool:
    return bool(window_ok(seq, pattern).all())
