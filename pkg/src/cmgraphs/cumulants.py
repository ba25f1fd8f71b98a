"""Mixed cumulants, and an exact laboratory for indicator families of a uniform permutation.

A family member Y_i is the indicator that a uniform permutation pi of {0..N-1} satisfies
pi(alpha) = beta for every pair in its constraint list.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

MAX_PARTITION_R = 12
MAX_ORACLE_N = 8
MAX_CLOSED_FORM_N = 10**6


def partitions(items: int | Sequence) -> list[list[tuple]]:
    """All set partitions of range(r) (or of a given sequence), each listed once."""
    items = list(range(items)) if isinstance(items, int) else list(items)
    if len(items) > MAX_PARTITION_R:
        raise ValueError(f"refusing to enumerate partitions of {len(items)} > {MAX_PARTITION_R} items")
    return [[tuple(b) for b in p] for p in _partitions(items)]


def _partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in _partitions(rest):
        # put first in its own block, or into each existing block
        yield [[first]] + p
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1 :]


def mixed_cumulant(moment: Callable[[tuple], object], r: int | Sequence):
    """kappa(X_1..X_r) from joint moments via the partition formula.

    ``moment`` maps a sorted tuple of indices to E prod X_i over them.
    """
    total = 0
    for p in partitions(r):
        q = len(p)
        term = (-1) ** (q - 1) * math.factorial(q - 1)
        for block in p:
            term = term * moment(tuple(sorted(block)))
        total = total + term
    return total


def moments_from_cumulants(cumulant: Callable[[tuple], object], r: int | Sequence):
    """E prod X_i as the sum over partitions of products of block cumulants."""
    total = 0
    for p in partitions(r):
        term = 1
        for block in p:
            term = term * cumulant(tuple(sorted(block)))
        total = total + term
    return total


# --- indicator families -----------------------------------------------------------------


@dataclass(frozen=True)
class IndicatorFamily:
    N: int
    members: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self):
        mem = tuple(tuple((int(a), int(b)) for a, b in m) for m in self.members)
        for m in mem:
            for a, b in m:
                if not (0 <= a < self.N and 0 <= b < self.N):
                    raise ValueError(f"pair {(a, b)} outside [0, {self.N})")
        object.__setattr__(self, "members", mem)

    @classmethod
    def from_json(cls, obj: dict) -> "IndicatorFamily":
        return cls(int(obj["N"]), tuple(tuple(tuple(p) for p in m) for m in obj["members"]))

    @property
    def r(self) -> int:
        return len(self.members)

    def degenerate_members(self) -> list[int]:
        """Members whose own constraints conflict, so Y_i is identically 0."""
        return [i for i, m in enumerate(self.members) if not _consistent(set(m))]


def _consistent(pairs: set) -> bool:
    alphas = {a for a, _ in pairs}
    betas = {b for _, b in pairs}
    return len(alphas) == len(pairs) == len(betas)


@dataclass(frozen=True)
class BlockStructure:
    b: int
    mue: int
    block_of: tuple[int, ...]

    @property
    def exponent(self) -> int:
        """The N-exponent -(b-1) - mue bounding |kappa|."""
        return -(self.b - 1) - self.mue


def blocks_and_mue(fam: IndicatorFamily, subset: Iterable[int] | None = None) -> BlockStructure:
    """Members sharing an alpha or a beta are joined; mue counts distinct (alpha, beta) pairs."""
    idx = list(range(fam.r)) if subset is None else list(subset)
    parent = list(range(len(idx)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    seen_a: dict[int, int] = {}
    seen_b: dict[int, int] = {}
    for j, i in enumerate(idx):
        for a, b in fam.members[i]:
            for seen, key in ((seen_a, a), (seen_b, b)):
                if key in seen:
                    parent[find(j)] = find(seen[key])
                else:
                    seen[key] = j
    roots = [find(j) for j in range(len(idx))]
    relabel = {r: k for k, r in enumerate(dict.fromkeys(roots))}
    mue = len({p for i in idx for p in fam.members[i]})
    return BlockStructure(len(relabel), mue, tuple(relabel[r] for r in roots))


def exact_moment(fam: IndicatorFamily, subset: Iterable[int]) -> Fraction:
    """E prod_{i in subset} Y_i = 1/(N)_mue when the union of constraints is injective, else 0."""
    pairs = {p for i in subset for p in fam.members[i]}
    if not _consistent(pairs):
        return Fraction(0)
    if len(pairs) > fam.N:
        return Fraction(0)
    return Fraction(1, math.perm(fam.N, len(pairs)))


def exact_mixed_cumulant(fam: IndicatorFamily) -> Fraction:
    if fam.N > MAX_CLOSED_FORM_N:
        raise ValueError(f"N={fam.N} exceeds {MAX_CLOSED_FORM_N}")
    return mixed_cumulant(lambda s: exact_moment(fam, s), fam.r)


def permutation_oracle(fam: IndicatorFamily) -> Fraction:
    """kappa(Y_1..Y_r) by enumerating all N! permutations."""
    if fam.N > MAX_ORACLE_N:
        raise ValueError(f"N={fam.N} too large for enumeration (max {MAX_ORACLE_N})")
    perms = np.array(list(itertools.permutations(range(fam.N))), dtype=np.int8).reshape(-1, fam.N)
    total = len(perms)
    ind = np.ones((fam.r, total), dtype=bool)
    for i, m in enumerate(fam.members):
        for a, b in m:
            ind[i] &= perms[:, a] == b

    def moment(s):
        return Fraction(int(np.logical_and.reduce(ind[list(s)], axis=0).sum()), total)

    return mixed_cumulant(moment, fam.r)


@dataclass
class ScalingResult:
    slope: float
    bound: int
    b: int
    mue: int
    Ns: list[int]
    kappas: list[Fraction]

    @property
    def compliant(self) -> bool:
        return self.slope <= self.bound + 0.05


def scaling_exponent(template: Callable[[int], IndicatorFamily], Ns: Sequence[int]) -> ScalingResult:
    """Least-squares slope of log|kappa| against log N, next to the bound -(b-1) - mue."""
    fams = [template(N) for N in Ns]
    bs = {(s.b, s.mue) for s in map(blocks_and_mue, fams)}
    if len(bs) != 1:
        raise ValueError("template changes its block structure with N")
    (b, mue), = bs
    kappas = [exact_mixed_cumulant(f) for f in fams]
    bound = -(b - 1) - mue
    if any(k == 0 for k in kappas):
        return ScalingResult(-math.inf, bound, b, mue, list(Ns), kappas)
    x = np.log(np.asarray(Ns, dtype=float))
    y = np.array([math.log(abs(k.numerator)) - math.log(k.denominator) for k in kappas])
    slope = float(np.polyfit(x, y, 1)[0])
    return ScalingResult(slope, bound, b, mue, list(Ns), kappas)


def disjoint_pair(N: int) -> IndicatorFamily:
    return IndicatorFamily(N, (((0, 0),), ((1, 1),)))


def conflicting_pair(N: int) -> IndicatorFamily:
    return IndicatorFamily(N, (((0, 0),), ((0, 1),)))


def disjoint_singletons(N: int, r: int = 3) -> IndicatorFamily:
    return IndicatorFamily(N, tuple((((i, i),)) for i in range(r)))
