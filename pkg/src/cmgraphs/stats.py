"""Seeded Monte Carlo harness, sample cumulants and the pass/fail diagnostics."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

from .census import ComponentIndex, census, count_class, count_copies, named_graph, psi_functional
from .confmodel import Multigraph, TriesExhausted, loop_and_parallel_counts, sample_multigraph, sample_simple
from .degrees import DegreeDistribution, DegreeSequence, from_pmf_rounded, sample_iid

SE_BAND = 3.0


# --- statistics extracted from one graph ---------------------------------------------------


class Sample:
    """One sampled graph with lazily built component structures."""

    def __init__(self, G: Multigraph, seq: DegreeSequence, attempts: int = 1, cap: int = 32):
        self.G, self.seq, self.attempts, self.cap = G, seq, attempts, cap
        self._index = None
        self._census = None
        self._lp = None

    @property
    def index(self) -> ComponentIndex:
        if self._index is None:
            self._index = ComponentIndex(self.G)
        return self._index

    @property
    def census(self):
        if self._census is None:
            self._census = census(self.G, cap=self.cap, index=self.index)
        return self._census

    @property
    def loops_parallel(self):
        if self._lp is None:
            self._lp = loop_and_parallel_counts(self.G)
        return self._lp


def _c1(s: Sample) -> float:
    return float(s.index.sizes.max()) if s.index.count else 0.0


def _chi_hat(s: Sample) -> float:
    sizes = s.index.sizes.astype(np.float64)
    if not len(sizes):
        return 0.0
    return float((np.sum(sizes**2) - sizes.max() ** 2) / s.G.n)


def _c2(s: Sample) -> float:
    sizes = np.sort(s.index.sizes)
    return float(sizes[-2]) if len(sizes) > 1 else 0.0


PSI = {
    "one": lambda C: 1,
    "isolated_vertex": lambda C: 1 if C.v == 1 and C.e == 0 else 0,
    "tree": lambda C: 1 if C.e == C.v - 1 else 0,
    "inv_size": lambda C: 1 / C.v,
    "edges": lambda C: C.e,
}

EXTRACTORS: dict[str, Callable[[Sample], float]] = {
    "loops": lambda s: float(s.loops_parallel[0]),
    "parallel": lambda s: float(s.loops_parallel[1]),
    "simple": lambda s: float(s.loops_parallel == (0, 0)),
    "c1": _c1,
    "c2": _c2,
    "chi_hat": _chi_hat,
    "kappa": lambda s: float(s.index.count),
    "attempts": lambda s: float(s.attempts),
}


def extractor(name: str) -> Callable[[Sample], float]:
    """Resolve a statistic name.

    Plain names come from EXTRACTORS; ``Z:<graph>`` counts isolated copies,
    ``copies:<graph>`` counts all copies of a small tree and ``psi:<name>`` evaluates the
    functional over non-giant components with psi from PSI.
    """
    if name in EXTRACTORS:
        return EXTRACTORS[name]
    kind, _, arg = name.partition(":")
    if kind == "Z":
        H = named_graph(arg)
        return lambda s: float(count_class(s.G, H, s.index))
    if kind == "copies":
        H = named_graph(arg)
        return lambda s: float(count_copies(H, s.G))
    if kind == "psi":
        if arg not in PSI:
            raise KeyError(f"unknown psi {arg!r}; choose from {sorted(PSI)}")
        psi = PSI[arg]
        return lambda s: float(psi_functional(s.census, psi))
    raise KeyError(f"unknown statistic {name!r}")


# --- plans and runs ------------------------------------------------------------------------


@dataclass
class ExperimentPlan:
    """What to sample and what to measure.

    Exactly one source: a fixed ``seq``, or ``dist`` with ``n``; with ``iid`` the degrees are
    redrawn for every replication, otherwise they are the rounded deterministic sequence.
    """

    statistics: list[str]
    R: int
    seed: int = 0
    seq: DegreeSequence | None = None
    dist: DegreeDistribution | None = None
    n: int | None = None
    iid: bool = False
    simple_only: bool = False
    max_tries: int | None = None
    cap: int = 32
    workers: int = 1

    def __post_init__(self):
        if self.R < 2:
            raise ValueError("R must be at least 2")
        if not self.statistics:
            raise ValueError("no statistics requested")
        if (self.seq is None) == (self.dist is None):
            raise ValueError("give exactly one of seq or dist")
        if self.dist is not None and (self.n is None or self.n < 1):
            raise ValueError("pmf source needs n >= 1")
        for s in self.statistics:
            extractor(s)

    def base_sequence(self) -> DegreeSequence | None:
        if self.seq is not None:
            return self.seq
        if not self.iid:
            return from_pmf_rounded(self.dist, self.n)
        return None

    def to_json(self) -> dict:
        src = (
            {"degrees_n": self.seq.n, "degrees_N": self.seq.N}
            if self.seq is not None
            else {"pmf": json.loads(self.dist.to_json()), "n": self.n, "iid": self.iid}
        )
        return {"R": self.R, "seed": self.seed, "statistics": self.statistics, "simple_only": self.simple_only, **src}


def replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _replicate(plan: ExperimentPlan, base: DegreeSequence | None, index: int):
    rng = replication_rng(plan.seed, index)
    seq = base if base is not None else sample_iid(plan.dist, plan.n, rng)
    if plan.simple_only:
        try:
            G, attempts = sample_simple(seq, rng, max_tries=plan.max_tries)
        except TriesExhausted:
            return index, None
    else:
        G, attempts = sample_multigraph(seq, rng), 1
    s = Sample(G, seq, attempts, plan.cap)
    return index, [extractor(name)(s) for name in plan.statistics]


def _replicate_chunk(args):
    plan, base, indices = args
    return [_replicate(plan, base, i) for i in indices]


def run(plan: ExperimentPlan) -> "MCReport":
    base = plan.base_sequence()
    if plan.workers <= 1:
        results = [_replicate(plan, base, i) for i in range(plan.R)]
    else:
        chunks = [list(range(w, plan.R, plan.workers)) for w in range(plan.workers)]
        with ProcessPoolExecutor(plan.workers) as ex:
            results = [r for part in ex.map(_replicate_chunk, [(plan, base, c) for c in chunks]) for r in part]
    results.sort(key=lambda r: r[0])
    ok = [r for _, r in results if r is not None]
    values = np.array(ok, dtype=np.float64).reshape(len(ok), len(plan.statistics))
    return MCReport(plan, values, failures=plan.R - len(ok))


# --- estimators ---------------------------------------------------------------------------


@dataclass
class Summary:
    R: int
    mean: float
    var: float
    k2: float
    k3: float
    k4: float
    g1: float
    g2: float
    se_g1: float
    se_g2: float

    def to_json(self) -> dict:
        return {k: _jsonable(v) for k, v in self.__dict__.items()}


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def kstats(x) -> tuple[float, float, float]:
    x = np.asarray(x, dtype=np.float64)
    return tuple(float(sps.kstat(x, n)) for n in (2, 3, 4))


def summarize(x) -> Summary:
    x = np.asarray(x, dtype=np.float64)
    R = len(x)
    if R < 4:
        raise ValueError("need at least 4 samples for k-statistics")
    k2, k3, k4 = kstats(x)
    k2 = max(k2, 0.0)
    if k2 > 0:
        g1, g2 = k3 / k2**1.5, k4 / k2**2
    else:
        g1 = g2 = math.nan
    return Summary(R, float(x.mean()), float(x.var(ddof=1)), k2, k3, k4, g1, g2, math.sqrt(6 / R), math.sqrt(24 / R))


@dataclass
class Verdict:
    label: str  # "pass", "fail" or "degenerate"
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.label == "pass"


def normality_diagnostic(samples, band: float = SE_BAND) -> Verdict:
    """Pass iff sample skewness and excess kurtosis lie within band standard errors of 0."""
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < 100:
        raise ValueError("normality diagnostic needs R >= 100")
    s = summarize(x)
    if s.k2 == 0:
        return Verdict("degenerate", {"k2": 0.0})
    b1, b2 = band * s.se_g1, band * s.se_g2
    ok = abs(s.g1) <= b1 and abs(s.g2) <= b2
    return Verdict("pass" if ok else "fail", {"g1": s.g1, "g2": s.g2, "g1_bound": b1, "g2_bound": b2})


def _poisson_bins(lam: float, R: int, min_expected: float = 5.0) -> list[int]:
    """Left edges of bins 0, 1, .., K-1 plus a pooled tail bin [K, inf)."""
    edges = [0]
    k = 0
    while True:
        left = R * sps.poisson.sf(k, lam)  # expected count strictly above k
        if R * sps.poisson.pmf(k, lam) < min_expected or left < min_expected:
            break
        k += 1
        edges.append(k)
    return edges


def poisson_diagnostic(samples, lam: float, c: float = 1.0, alpha: float = 1e-3) -> Verdict:
    """Dispersion index within 1 +- 3 c sqrt(2/R) and chi-square p-value above alpha."""
    x = np.asarray(samples, dtype=np.int64)
    R = len(x)
    if R < 100:
        raise ValueError("poisson diagnostic needs R >= 100")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    lam = float(lam)
    mean = float(x.mean())
    if lam == 0:
        return Verdict("pass" if not x.any() else "fail", {"mean": mean})
    if mean == 0:
        return Verdict("fail", {"mean": 0.0, "reason": "all samples zero"})
    disp = float(x.var(ddof=1)) / mean
    half = SE_BAND * c * math.sqrt(2 / R)
    disp_ok = abs(disp - 1) <= half
    edges = _poisson_bins(lam, R)
    details = {"mean": mean, "dispersion": disp, "dispersion_band": [1 - half, 1 + half]}
    if len(edges) >= 2:
        K = edges[-1]
        obs = [int((x == k).sum()) for k in range(K)] + [int((x >= K).sum())]
        exp = [R * sps.poisson.pmf(k, lam) for k in range(K)] + [R * sps.poisson.sf(K - 1, lam)]
        chi2, p = sps.chisquare(obs, exp)
        details.update(chi2=float(chi2), p_value=float(p), bins=len(obs))
        chi_ok = p > alpha
    else:
        chi_ok = True
        details["p_value"] = None
    return Verdict("pass" if disp_ok and chi_ok else "fail", details)


@dataclass
class CovEstimate:
    value: float
    se: float


def cross_covariance(a, b) -> CovEstimate:
    """Unbiased sample covariance with a jackknife standard error."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("sample lengths differ")
    R = len(a)
    if R < 3:
        raise ValueError("need at least 3 samples")
    # center first for numerical stability; covariance is shift invariant
    a = a - a.mean()
    b = b - b.mean()
    sa, sb, sab = a.sum(), b.sum(), (a * b).sum()
    full = (sab - sa * sb / R) / (R - 1)
    m = R - 1
    loo = (sab - a * b - (sa - a) * (sb - b) / m) / (m - 1)
    se = math.sqrt((R - 1) / R * float(np.sum((loo - loo.mean()) ** 2)))
    return CovEstimate(float(full), se)


def factorial_moment(x, r: int) -> tuple[float, float]:
    """Sample E (X)_r and its standard error."""
    x = np.asarray(x, dtype=np.float64)
    f = np.ones_like(x)
    for i in range(r):
        f *= x - i
    return float(f.mean()), float(f.std(ddof=1) / math.sqrt(len(f)))


def mixed_factorial_moment(x, y, r: int = 1, s: int = 1) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    f = np.ones_like(x)
    for i in range(r):
        f *= x - i
    for i in range(s):
        f *= y - i
    return float(f.mean()), float(f.std(ddof=1) / math.sqrt(len(f)))


# --- report ---------------------------------------------------------------------------------


@dataclass
class Comparison:
    name: str
    observed: float
    theory: float | None
    tolerance: float | None
    passed: bool
    note: str = ""

    def to_json(self) -> dict:
        return {k: _jsonable(v) for k, v in self.__dict__.items()}


@dataclass
class MCReport:
    plan: ExperimentPlan
    values: np.ndarray
    failures: int = 0
    comparisons: list[Comparison] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.plan.statistics.index(name)]

    def summary(self, name: str) -> Summary:
        return summarize(self.column(name))

    @property
    def covariance(self) -> np.ndarray:
        if len(self.values) < 2:
            return np.full((len(self.plan.statistics),) * 2, np.nan)
        return np.atleast_2d(np.cov(self.values, rowvar=False))

    def compare(self, name, observed, theory=None, tolerance=None, passed=None, note="") -> Comparison:
        if passed is None:
            passed = abs(observed - theory) <= tolerance
        c = Comparison(name, float(observed), None if theory is None else float(theory),
                       None if tolerance is None else float(tolerance), bool(passed), note)
        self.comparisons.append(c)
        return c

    @property
    def passed(self) -> bool:
        return self.failures == 0 and all(c.passed for c in self.comparisons)

    def to_json(self) -> dict:
        ok = len(self.values)
        stats = {}
        for name in self.plan.statistics:
            col = self.column(name)
            stats[name] = summarize(col).to_json() if ok >= 4 else {"mean": float(col.mean()) if ok else None}
        return {
            "plan": self.plan.to_json(),
            "replications": ok,
            "failures": self.failures,
            "statistics": stats,
            "covariance": [[_jsonable(float(v)) for v in row] for row in self.covariance],
            "comparisons": [c.to_json() for c in self.comparisons],
            "passed": self.passed,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["statistic", "mean", "var", "k3", "k4", "comparison", "observed", "theory", "tolerance", "passed"])
        ok = len(self.values) >= 4
        for name in self.plan.statistics:
            s = self.summary(name) if ok else None
            row = [name, s.mean if s else "", s.var if s else "", s.k3 if s else "", s.k4 if s else ""]
            mine = [c for c in self.comparisons if c.name.split(" ")[0] == name] or [None]
            for c in mine:
                w.writerow(row + ([c.name, c.observed, c.theory, c.tolerance, c.passed] if c else ["", "", "", "", ""]))
        return buf.getvalue()
