"""Degree sequences and limiting degree distributions."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

PMF_TOL = 1e-12


class ParityViolation(ValueError):
    """Total degree is odd, so no perfect matching of half-edges exists."""


class DegenerateDistribution(ValueError):
    pass


def to_exact(x):
    """Convert a probability to Fraction when that is lossless, else mpf.

    Floats go through their shortest repr, so 0.5 becomes 1/2 and 0.1 becomes 1/10.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (float, np.floating)):
        return Fraction(repr(float(x)))
    if isinstance(x, mpmath.mpf):
        return x
    raise TypeError(f"unsupported probability type {type(x).__name__}")


def to_mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@dataclass(frozen=True)
class DegreeSequence:
    degrees: tuple[int, ...]

    def __post_init__(self):
        if any(d < 0 for d in self.degrees):
            raise ValueError("degrees must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def N(self) -> int:
        return sum(self.degrees)

    @property
    def histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.degrees).items()))

    @property
    def degenerate(self) -> bool:
        return self.N == 0

    def as_array(self) -> np.ndarray:
        return np.asarray(self.degrees, dtype=np.int64)

    def moment(self, m: int) -> Fraction:
        return Fraction(sum(d**m for d in self.degrees), self.n)

    def empirical(self) -> "DegreeDistribution":
        return DegreeDistribution({k: Fraction(c, self.n) for k, c in self.histogram.items()})


def fix_parity(degrees: list[int]) -> list[int]:
    """Drop one half-edge from the highest-index vertex with positive degree if N is odd."""
    if sum(degrees) % 2 == 0:
        return degrees
    out = list(degrees)
    for i in range(len(out) - 1, -1, -1):
        if out[i] >= 1:
            out[i] -= 1
            return out
    return out  # unreachable: odd sum implies some positive degree


def from_counts(histogram: dict[int, int], fix_odd: bool = False) -> DegreeSequence:
    """Expand a histogram {k: n_k} into a degree sequence sorted by k."""
    if any(c < 0 for c in histogram.values()):
        raise ValueError("counts must be nonnegative")
    degrees = [int(k) for k in sorted(histogram) for _ in range(int(histogram[k]))]
    if sum(degrees) % 2:
        if not fix_odd:
            raise ParityViolation(f"total degree {sum(degrees)} is odd")
        degrees = fix_parity(degrees)
    return DegreeSequence(tuple(degrees))


@dataclass(frozen=True)
class DegreeDistribution:
    """Finite-support pmf k -> p_k with exact (Fraction) or mpf entries."""

    pmf: dict[int, object] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, p in sorted(self.pmf.items()):
            k = int(k)
            if k < 0:
                raise ValueError("degrees must be nonnegative")
            p = to_exact(p)
            if p < 0:
                raise ValueError(f"negative probability at k={k}")
            if p != 0:
                clean[k] = p
        total = sum(clean.values())
        if abs(total - 1) > PMF_TOL:
            raise ValueError(f"pmf sums to {total}, not 1")
        object.__setattr__(self, "pmf", clean)

    @property
    def exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.pmf.values())

    @property
    def support(self) -> list[int]:
        return list(self.pmf)

    @property
    def support_max(self) -> int:
        return max(self.pmf)

    def p(self, k: int):
        return self.pmf.get(k, Fraction(0) if self.exact else mpmath.mpf(0))

    def moment(self, m: int):
        return sum((Fraction(k**m) if self.exact else k**m) * p for k, p in self.pmf.items())

    @property
    def mu(self):
        return self.moment(1)

    def falling_moment(self, r: int):
        """E (D)_r."""
        return sum(math.perm(k, r) * p for k, p in self.pmf.items())

    def as_float_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        ks = np.array(self.support, dtype=np.int64)
        ps = np.array([float(p) for p in self.pmf.values()], dtype=float)
        return ks, ps / ps.sum()

    def to_json(self) -> str:
        return json.dumps([[k, str(p) if isinstance(p, Fraction) else float(p)] for k, p in self.pmf.items()])


def size_biased(dist: DegreeDistribution) -> DegreeDistribution:
    """Offspring law of non-root vertices: P(k-1) = k p_k / mu."""
    mu = dist.mu
    if mu == 0:
        raise DegenerateDistribution("size-biasing needs a positive mean")
    return DegreeDistribution({k - 1: k * p / mu for k, p in dist.pmf.items() if k >= 1})


def moment(obj, m: int):
    return obj.moment(m)


@dataclass(frozen=True)
class AssumptionReport:
    mu: object
    m2: object
    edd2: object
    supercritical: bool
    ap1: bool
    bounded_moments: bool = True
    max_order_checked: int = 0


def check_assumptions(dist: DegreeDistribution, max_order: int = 8) -> AssumptionReport:
    # finite support makes every moment finite; max_order only records how far the
    # caller wanted the moment condition checked
    mu = dist.moment(1)
    m2 = dist.moment(2)
    edd2 = m2 - 2 * mu
    p0, p1 = dist.p(0), dist.p(1)
    finite = all(math.isfinite(float(dist.moment(m))) for m in range(max_order + 1))
    return AssumptionReport(
        mu=mu,
        m2=m2,
        edd2=edd2,
        supercritical=edd2 > 0,
        ap1=p1 > 0 and p0 + p1 < 1,
        bounded_moments=finite,
        max_order_checked=max_order,
    )


def poisson(c, tol: float = 1e-20) -> DegreeDistribution:
    """Po(c) truncated at the first K with dropped mass < tol, renormalized (mpf entries)."""
    c = mpmath.mpf(c)
    probs = []
    k = 0
    acc = mpmath.mpf(0)
    while True:
        p = mpmath.exp(-c) * c**k / mpmath.factorial(k)
        probs.append(p)
        acc += p
        if 1 - acc < tol and k > c:
            break
        k += 1
    return DegreeDistribution({k: p / acc for k, p in enumerate(probs)})


def sample_iid(dist: DegreeDistribution, n: int, rng: np.random.Generator) -> DegreeSequence:
    if n < 1:
        raise ValueError("n must be positive")
    ks, ps = dist.as_float_arrays()
    draws = ks[np.searchsorted(np.cumsum(ps), rng.random(n), side="right").clip(max=len(ks) - 1)]
    return DegreeSequence(tuple(fix_parity(draws.tolist())))


def from_pmf_rounded(dist: DegreeDistribution, n: int) -> DegreeSequence:
    """Deterministic n_k ~ n p_k: floors, then largest remainders (ties to smaller k), then parity fix."""
    targets = {k: p * n for k, p in dist.pmf.items()}
    counts = {k: int(math.floor(t)) for k, t in targets.items()}
    short = n - sum(counts.values())
    order = sorted(targets, key=lambda k: (-(targets[k] - counts[k]), k))
    for k in order[:short]:
        counts[k] += 1
    return from_counts(counts, fix_odd=True)


def read_pmf(path: str | Path) -> DegreeDistribution:
    """JSON array of [k, p_k] pairs; p_k may be a number or a rational string like "1/2"."""
    pairs = json.loads(Path(path).read_text())
    return DegreeDistribution({int(k): to_exact(p) for k, p in pairs})


def parse_pmf(text: str) -> DegreeDistribution:
    pairs = json.loads(text)
    return DegreeDistribution({int(k): to_exact(p) for k, p in pairs})


def read_degrees(path: str | Path, fix_odd: bool = False) -> DegreeSequence:
    """Newline-separated integers, or a JSON histogram {"k": count}."""
    text = Path(path).read_text().strip()
    if text.startswith("{"):
        hist = {int(k): int(v) for k, v in json.loads(text).items()}
        return from_counts(hist, fix_odd=fix_odd)
    degrees = [int(tok) for tok in text.split()]
    if sum(degrees) % 2:
        if not fix_odd:
            raise ParityViolation(f"total degree {sum(degrees)} is odd")
        degrees = fix_parity(degrees)
    return DegreeSequence(tuple(degrees))
