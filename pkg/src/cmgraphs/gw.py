"""Limiting Galton-Watson tree: pgf, extinction root, small-tree probabilities, EE sums."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np

from .census import CanonGraph, canonical_code
from .degrees import DegenerateDistribution, DegreeDistribution, size_biased, to_mpf

mpmath.mp.dps = 50

TAIL_LEVELS = 5
TAIL_PAD = 1.5
DEFAULT_ESCAPE = 100_000


class TailFitError(ValueError):
    """Level masses are not decaying, so no geometric tail can be fitted."""


class DenominatorVanishes(ZeroDivisionError):
    pass


def pgf(dist: DegreeDistribution, z):
    """(f(z), f'(z), f''(z)) for f(z) = sum p_k z^k."""
    if not isinstance(z, Fraction) or not dist.exact:
        z = to_mpf(z)
        items = [(k, to_mpf(p)) for k, p in dist.pmf.items()]
        zero = mpmath.mpf(0)
    else:
        items = list(dist.pmf.items())
        zero = Fraction(0)
    f = d1 = d2 = zero
    for k, p in items:
        f += p * z**k
        if k >= 1:
            d1 += k * p * z ** (k - 1)
        if k >= 2:
            d2 += k * (k - 1) * p * z ** (k - 2)
    return f, d1, d2


def _g(dist, z):
    return pgf(dist, z)[1] - dist.mu * z


def extinction_root(dist: DegreeDistribution):
    """Root of f'(z) = mu z in [0, 1) when E D(D-2) > 0, else 1.

    Bisection then Newton polish at 50 digits; returned as a Fraction when an exact
    rational root is confirmed, otherwise as an mpf.
    """
    mu = dist.mu
    if mu == 0:
        raise DegenerateDistribution("mean degree is zero")
    edd2 = dist.moment(2) - 2 * mu
    if edd2 <= 0:
        return Fraction(1)
    if dist.p(1) == 0:
        return Fraction(0)
    lo = mpmath.mpf(0)
    gap = mpmath.mpf("1e-9")
    while _g(dist, 1 - gap) >= 0:
        gap /= 2
    hi = 1 - gap
    for _ in range(200):
        mid = (lo + hi) / 2
        if _g(dist, mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < mpmath.mpf(10) ** -45:
            break
    z = (lo + hi) / 2
    for _ in range(3):
        _, d1, d2 = pgf(dist, z)
        slope = d2 - to_mpf(mu)
        if slope == 0:
            break
        z -= (d1 - to_mpf(mu) * z) / slope
    if dist.exact:
        guess = Fraction(mpmath.nstr(z, 40)).limit_denominator(10**9)
        if _g(dist, guess) == 0:
            return guess
    return z


@dataclass(frozen=True)
class GWSpec:
    dist: DegreeDistribution
    offspring: DegreeDistribution
    zeta: object

    @property
    def mu(self):
        return self.dist.mu


def make_spec(dist: DegreeDistribution) -> GWSpec:
    return GWSpec(dist=dist, offspring=size_biased(dist), zeta=extinction_root(dist))


# --- rooted trees as canonical nested tuples ---------------------------------------------
# A rooted tree is the sorted tuple of its children's rooted trees; a leaf is ().


def rooted_form(v: int, edges, root: int) -> tuple:
    adj = [[] for _ in range(v)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)

    def build(x, parent):
        return tuple(sorted(build(y, x) for y in adj[x] if y != parent))

    return build(root, -1)


def rooted_size(t: tuple) -> int:
    return 1 + sum(rooted_size(c) for c in t)


def rooted_to_edges(t: tuple) -> tuple[int, list[tuple[int, int]]]:
    edges = []
    counter = [0]

    def walk(node, me):
        for child in node:
            counter[0] += 1
            c = counter[0]
            edges.append((me, c))
            walk(child, c)

    walk(t, 0)
    return counter[0] + 1, edges


def _multinomial(children: tuple) -> int:
    out = math.factorial(len(children))
    for m in Counter(children).values():
        out //= math.factorial(m)
    return out


def rooted_tree_prob(T: tuple, spec: GWSpec):
    """P(GW tree equals T as an unlabelled rooted tree).

    Root uses the law of D, all other vertices the offspring law D^-1. Children of a
    GW vertex are ordered, hence the multinomial count of distinct child orders.
    """
    off = spec.offspring
    memo: dict = {}

    def below(node):
        hit = memo.get(node)
        if hit is None:
            hit = off.p(len(node)) * _multinomial(node)
            if hit:
                for c in node:
                    hit *= below(c)
                    if not hit:
                        break
            memo[node] = hit
        return hit

    prob = spec.dist.p(len(T)) * _multinomial(T)
    for c in T:
        if not prob:
            break
        prob *= below(c)
    return prob


def rooted_shapes(H) -> set[tuple]:
    """One rooted form per vertex orbit."""
    v, edges = (H.v, H.edges) if isinstance(H, CanonGraph) else H
    return {rooted_form(v, edges, r) for r in range(v)}


def unrooted_tree_prob(T, spec: GWSpec):
    return sum(rooted_tree_prob(t, spec) for t in rooted_shapes(T))


# --- catalog ------------------------------------------------------------------------------


@dataclass
class TreeCatalog:
    entries: list[tuple[CanonGraph, object]]
    L: int

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def total_mass(self):
        return sum(p for _, p in self.entries)

    def by_code(self) -> dict[bytes, object]:
        return {t.code: p for t, p in self.entries}


def _multisets(pool: list[tuple[int, tuple]], total: int, count: int, start: int = 0):
    """Nondecreasing index selections from pool whose sizes sum to total, of given length."""
    if count == 0:
        if total == 0:
            yield ()
        return
    for i in range(start, len(pool)):
        size, t = pool[i]
        if size * count > total:
            break
        for rest in _multisets(pool, total - size, count - 1, i):
            yield (t,) + rest


def enumerate_trees(spec: GWSpec, L: int) -> TreeCatalog:
    """All unrooted trees with at most L edges whose degrees lie in the support."""
    support = set(spec.dist.support)
    child_counts = sorted(k - 1 for k in support if k >= 1)
    # planted[m]: rooted trees with m vertices where each vertex has c children, c + 1 in support
    planted: dict[int, list[tuple]] = {}
    pool: list[tuple[int, tuple]] = []
    for m in range(1, L + 1):
        found = set()
        for c in child_counts:
            if c == 0:
                if m == 1:
                    found.add(())
                continue
            if m - 1 < c:
                continue
            for kids in _multisets(pool, m - 1, c):
                found.add(tuple(sorted(kids)))
        planted[m] = sorted(found)
        pool.extend((m, t) for t in planted[m])
    seen: dict[bytes, CanonGraph] = {}
    if 0 in support:
        k1 = canonical_code((1, []))
        seen[k1.code] = k1
    for v in range(2, L + 2):
        for c in sorted(k for k in support if k >= 1):
            if c > v - 1:
                break
            for kids in _multisets(pool, v - 1, c):
                nv, edges = rooted_to_edges(tuple(sorted(kids)))
                cg = canonical_code((nv, edges), cap=max(L, 1))
                seen.setdefault(cg.code, cg)
    trees = sorted(seen.values(), key=lambda t: (t.e, t.code))
    return TreeCatalog([(t, unrooted_tree_prob(t, spec)) for t in trees], L)


# --- EE sums --------------------------------------------------------------------------------


@dataclass
class EEResult:
    value: object
    tail: float | None
    levels: dict[int, float] = field(default_factory=dict)

    @property
    def tail_known(self) -> bool:
        return self.tail is not None


def fit_tail(levels: dict[int, object], n_fit: int = TAIL_LEVELS) -> float | None:
    """Extrapolated sum of |level contributions| beyond the last level.

    Fits log|c_l| = a + b l + g log l on the last n_fit nonzero levels (geometric decay with a
    power-law prefactor), sums the fitted terms to convergence and pads by TAIL_PAD.
    Returns None when fewer than n_fit levels are nonzero.
    """
    pts = [(l, abs(float(c))) for l, c in sorted(levels.items()) if c != 0 and l > 0]
    if len(pts) < n_fit:
        return None
    pts = pts[-n_fit:]
    xs = np.array([p[0] for p in pts], dtype=float)
    ys = np.log([p[1] for p in pts])
    design = np.column_stack([np.ones_like(xs), xs, np.log(xs)])
    a, b, g = np.linalg.lstsq(design, ys, rcond=None)[0]
    if b >= 0:
        raise TailFitError(f"level contributions do not decay geometrically (rate {b:.3g})")
    step = float(np.median(np.diff(xs)))
    future = xs[-1] + step * np.arange(1, 1 + int(60 / (-b * step)) + 1)
    return TAIL_PAD * float(np.exp(a + b * future + g * np.log(future)).sum())


def ee_truncated(spec: GWSpec, g: Callable, L: int, catalog: TreeCatalog | None = None) -> EEResult:
    """sum over catalogued trees with e(T) <= L of p_T g(T), with a geometric tail estimate."""
    catalog = catalog if catalog is not None and catalog.L >= L else enumerate_trees(spec, L)
    levels: dict[int, object] = {}
    total = 0
    for T, p in catalog:
        if T.e > L or not p:
            continue
        c = p * g(T)
        levels[T.e] = levels.get(T.e, 0) + c
        total += c
    return EEResult(total, fit_tail(levels), {k: float(v) for k, v in levels.items()})


@dataclass(frozen=True)
class HistClass:
    """All trees sharing one degree histogram; enough for functionals of (v, e, n_k)."""

    v: int
    e: int
    nk: dict


def tree_histograms(support, L: int):
    """Degree histograms {k: h_k} of trees with at most L edges and degrees in support."""
    support = set(support)
    big = sorted(k for k in support if k >= 3)
    out = []
    if 0 in support:
        out.append({0: 1})
    if 1 not in support:
        return out
    for v in range(2, L + 2):

        def rec(i, budget, acc):
            # budget: remaining sum of h_k (k - 1) allowed among k >= 3 given v
            if i == len(big):
                excess = sum(h * (k - 2) for k, h in acc.items())
                h1 = 2 + excess
                h2 = v - h1 - sum(acc.values())
                if h2 < 0 or (h2 > 0 and 2 not in support):
                    return
                hist = {1: h1}
                if h2:
                    hist[2] = h2
                hist.update({k: h for k, h in acc.items() if h})
                out.append(dict(sorted(hist.items())))
                return
            k = big[i]
            h = 0
            while h * (k - 1) <= budget:
                acc[k] = h
                rec(i + 1, budget - h * (k - 1), acc)
                h += 1
            acc.pop(k, None)

        rec(0, v - 2, {})
    return out


def histogram_mass(spec: GWSpec, hist: dict[int, int]):
    """Total p_T over trees with this degree histogram.

    Uses the count (v-2)!/prod (d_i-1)! of labelled trees with given degrees.
    """
    v = sum(hist.values())
    dist = spec.dist
    if v == 1:
        return dist.p(0)
    mass = v * math.factorial(v - 2) / dist.mu ** (v - 1)
    for k, h in hist.items():
        mass *= (k * dist.p(k)) ** h / math.factorial(h)
    return mass


def ee_histogram(spec: GWSpec, g: Callable, L: int) -> EEResult:
    """EE sum for g depending only on (v, e, n_k), aggregated per degree histogram."""
    levels: dict[int, object] = {}
    total = 0
    for hist in tree_histograms(spec.dist.support, L):
        v = sum(hist.values())
        cls = HistClass(v, v - 1, hist)
        c = histogram_mass(spec, hist) * g(cls)
        if c:
            levels[v - 1] = levels.get(v - 1, 0) + c
            total += c
    return EEResult(total, fit_tail(levels), {k: float(x) for k, x in levels.items()})


def ee_closed_size_edges(spec: GWSpec):
    """(EE|T|, EE e(T)) in closed form from the extinction root."""
    mu = spec.mu
    zeta = spec.zeta
    f, _, f2 = pgf(spec.dist, zeta)
    if not isinstance(f, Fraction):
        mu = to_mpf(mu)
    den = mu - f2
    if den == 0:
        raise DenominatorVanishes("mu equals f''(zeta)")
    edges = mu**2 * zeta**2 / den
    return f + edges, edges


# --- simulation -----------------------------------------------------------------------------


class Escaped:
    """Marker for a GW draw that exceeded the size cap."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "ESCAPED"


ESCAPED = Escaped()


@dataclass(frozen=True)
class GWTree:
    v: int
    edges: tuple

    def canon(self) -> CanonGraph:
        return canonical_code((self.v, self.edges), cap=max(self.v, 1))


def _sampler(d: DegreeDistribution):
    ks, ps = d.as_float_arrays()
    cdf = np.cumsum(ps)

    def draw(rng, size):
        idx = np.searchsorted(cdf, rng.random(size), side="right").clip(max=len(ks) - 1)
        return ks[idx]

    return draw


def sample_gw(spec: GWSpec, rng: np.random.Generator, size_cap: int = DEFAULT_ESCAPE):
    """Generation-by-generation draw; returns a GWTree or ESCAPED."""
    if size_cap < 1:
        raise ValueError("size_cap must be positive")
    root_draw = _sampler(spec.dist)
    off_draw = _sampler(spec.offspring)
    edges = []
    c = int(root_draw(rng, 1)[0])
    total = 1
    frontier = list(range(total, total + c))
    edges.extend((0, x) for x in frontier)
    total += c
    while frontier:
        if total > size_cap:
            return ESCAPED
        kids = off_draw(rng, len(frontier))
        nxt = []
        for parent, k in zip(frontier, kids.tolist()):
            for _ in range(k):
                edges.append((parent, total))
                nxt.append(total)
                total += 1
        frontier = nxt
    if total > size_cap:
        return ESCAPED
    return GWTree(total, tuple(edges))
