"""Closed-form asymptotics and exact finite-n moments for component counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .census import CanonGraph
from .degrees import DegenerateDistribution, DegreeDistribution, DegreeSequence, to_mpf
from .gw import (
    GWSpec,
    HistClass,
    TreeCatalog,
    ee_histogram,
    ee_truncated,
    enumerate_trees,
    make_spec,
    pgf,
)

DEFAULT_L = 40


class NotSupercritical(ValueError):
    pass


def lambda_H(H: CanonGraph, dist: DegreeDistribution):
    """Limit of E(isolated copies of H)/n: mu^-e / aut * prod_u p_d(u) d(u)!."""
    val = 1 / dist.mu ** H.e / H.aut
    for k, h in H.nk.items():
        val *= (dist.p(k) * math.factorial(k)) ** h
    return val


def tree_inner(H1: CanonGraph, H2: CanonGraph, dist: DegreeDistribution):
    """2 e1 e2 / mu - sum_k n_k(H1) n_k(H2) / p_k, skipping k with p_k = 0."""
    val = 2 * H1.e * H2.e / dist.mu
    for k, h in H1.nk.items():
        h2 = H2.nk.get(k, 0)
        if h and h2:
            pk = dist.p(k)
            if pk:
                val -= Fraction(h * h2) / pk if isinstance(pk, Fraction) else h * h2 / pk
    return val


def sigma_pair(H1: CanonGraph, H2: CanonGraph, dist: DegreeDistribution):
    """Asymptotic covariance of isolated tree counts divided by n."""
    l1, l2 = lambda_H(H1, dist), lambda_H(H2, dist)
    val = l1 if H1 == H2 else 0 * l1
    if l1 and l2:
        val += l1 * l2 * tree_inner(H1, H2, dist)
    return val


def sigma_matrix(trees: list[CanonGraph], dist: DegreeDistribution):
    return [[sigma_pair(a, b, dist) for b in trees] for a in trees]


def poisson_rates(dist: DegreeDistribution):
    """Limiting Poisson means of (loops, pairs of parallel edges): nu/2 and nu^2/4, nu = E D(D-1)/mu."""
    nu = dist.falling_moment(2) / dist.mu
    return nu / 2, nu**2 / 4


# --- exact finite-n moments -------------------------------------------------------------


def falling(n: int, r: int) -> int:
    return math.perm(n, r) if 0 <= r <= n else 0


def odd_falling(m: int, r: int) -> int:
    """(m)(m-2)...(m-2r+2)."""
    out = 1
    for i in range(r):
        out *= m - 2 * i
    return out


def _labelled_isolated(H: CanonGraph, hist: dict[int, int], N: int) -> Fraction:
    if 2 * H.e > N:
        return Fraction(0)
    num = 1
    for k, h in H.nk.items():
        num *= falling(hist.get(k, 0), h) * math.factorial(k) ** h
    return Fraction(num, odd_falling(N - 1, H.e)) if num else Fraction(0)


def exact_mean_isolated(H: CanonGraph, seq: DegreeSequence, unlabelled: bool = False) -> Fraction:
    """Exact expected number of isolated copies of H in the configuration multigraph."""
    val = _labelled_isolated(H, seq.histogram, seq.N)
    return val / H.aut if unlabelled else val


def exact_cov_isolated(H1: CanonGraph, H2: CanonGraph, seq: DegreeSequence) -> Fraction:
    """Exact Cov of unlabelled isolated counts of two trees at finite n."""
    hist, N = seq.histogram, seq.N
    m1 = exact_mean_isolated(H1, seq, unlabelled=True)
    m2 = exact_mean_isolated(H2, seq, unlabelled=True)
    # disjoint pairs: condition on a copy of H1 and count H2 in the rest of the graph
    rest = {k: c - H1.nk.get(k, 0) for k, c in hist.items()}
    disjoint = m1 * _labelled_isolated(H2, rest, N - 2 * H1.e) / H2.aut if m1 else Fraction(0)
    second = disjoint + (m1 if H1 == H2 else 0)
    return second - m1 * m2


# --- giant component -------------------------------------------------------------------


def _num(spec: GWSpec, x):
    return x if isinstance(spec.zeta, Fraction) and spec.dist.exact else to_mpf(x)


def giant_mean_var(dist: DegreeDistribution, spec: GWSpec | None = None):
    """(limit of E|C1|/n, limit of Var|C1|/n) from the extinction root."""
    if dist.mu == 0:
        raise DegenerateDistribution("mean degree is zero")
    if dist.moment(2) - 2 * dist.mu <= 0:
        raise NotSupercritical("E D(D-2) <= 0")
    spec = spec or make_spec(dist)
    z = spec.zeta
    mu = _num(spec, dist.mu)
    f, _, f2 = pgf(dist, z)
    g, g1, g2 = pgf(dist, z * z)
    den = mu - f2
    if den == 0:
        raise ZeroDivisionError("mu equals f''(zeta)")
    var = (
        f
        + mu**2 * z**2 / den
        + 2 * mu**3 * z**4 / den**2
        - g
        - 2 * mu * z**2 / den * g1
        - mu**2 / den**2 * (z**4 * g2 + z**2 * g1)
    )
    return 1 - f, var


@dataclass
class PsiVariance:
    value: object
    tail: float | None
    parts: dict = field(default_factory=dict)


def sigma_psi(
    psi: Callable,
    dist: DegreeDistribution,
    L: int = DEFAULT_L,
    histogram: bool = False,
    spec: GWSpec | None = None,
    catalog: TreeCatalog | None = None,
) -> PsiVariance:
    """Asymptotic variance/n of sum over non-giant components of |C| psi(C).

    EE(|T| psi^2) + (2/mu) EE(e psi)^2 - sum_k EE(n_k psi)^2 / p_k, each EE truncated at
    L edges. With histogram=True, psi must depend only on (v, e, nk) and the sums run
    over degree histograms instead of individual trees.
    """
    spec = spec or make_spec(dist)
    if histogram:
        ee = lambda g: ee_histogram(spec, g, L)
    else:
        catalog = catalog if catalog is not None else enumerate_trees(spec, L)
        ee = lambda g: ee_truncated(spec, g, L, catalog)
    a = ee(lambda T: T.v * psi(T) ** 2)
    b = ee(lambda T: T.e * psi(T))
    mu = dist.mu
    val = a.value + 2 * b.value**2 / mu
    tails = [a.tail, None if b.tail is None else (2 * abs(float(b.value)) * b.tail + b.tail**2) * 2 / float(mu)]
    cs = {}
    for k in dist.support:
        c = ee(lambda T, k=k: T.nk.get(k, 0) * psi(T))
        cs[k] = c.value
        val -= c.value**2 / dist.p(k)
        tails.append(None if c.tail is None else (2 * abs(float(c.value)) * c.tail + c.tail**2) / float(dist.p(k)))
    tail = None if any(t is None for t in tails) else float(sum(tails))
    return PsiVariance(val, tail, {"EE_v_psi2": a.value, "EE_e_psi": b.value, "EE_nk_psi": cs})


# --- random degree sequences ------------------------------------------------------------


def sigma_bar_iid(H1: CanonGraph, H2: CanonGraph, dist: DegreeDistribution):
    """Covariance/n of isolated tree counts when degrees are iid draws from dist."""
    l1, l2 = lambda_H(H1, dist), lambda_H(H2, dist)
    val = l1 if H1 == H2 else 0 * l1
    edd2 = dist.moment(2) - 2 * dist.mu
    return val + l1 * l2 * (edd2 * H1.e * H2.e / dist.mu**2 - 1)


def _weights(H: CanonGraph, dist: DegreeDistribution):
    mu = dist.mu
    return {k: H.nk.get(k, 0) / dist.p(k) - k * H.e / mu for k in dist.support}


def sigma_bar_general(H1: CanonGraph, H2: CanonGraph, dist: DegreeDistribution, gamma) -> object:
    """sigma_{H1,H2} plus the degree-fluctuation term for covariance kernel gamma(k, l).

    gamma is a callable or a dict keyed by (k, l); it is summed over the support of dist.
    """
    base = sigma_pair(H1, H2, dist)
    l1, l2 = lambda_H(H1, dist), lambda_H(H2, dist)
    if not (l1 and l2):
        return base
    get = gamma if callable(gamma) else (lambda k, l: gamma.get((k, l), 0))
    w1, w2 = _weights(H1, dist), _weights(H2, dist)
    extra = 0
    for k in dist.support:
        for l in dist.support:
            g = get(k, l)
            if g:
                extra += w1[k] * w2[l] * g
    return base + l1 * l2 * extra


def iid_kernel(dist: DegreeDistribution) -> dict:
    return {(k, l): (dist.p(k) if k == l else 0) - dist.p(k) * dist.p(l) for k in dist.support for l in dist.support}


def erdos_renyi_kernel(dist: DegreeDistribution, c, chi: int) -> dict:
    """Degree-count covariance kernel of G(n, c/n) (chi=+1) or G(n, m=cn/2) (chi=-1)."""
    c = to_mpf(c) if not isinstance(c, Fraction) else c
    base = iid_kernel(dist)
    return {
        (k, l): g + chi * (k - c) * (l - c) / c * dist.p(k) * dist.p(l) for (k, l), g in base.items()
    }


def sigma_bar_erdos_renyi(H1: CanonGraph, H2: CanonGraph, dist: DegreeDistribution, c, chi: int):
    """Closed form of the Erdos-Renyi covariance for Poisson(c) degrees."""
    l1, l2 = lambda_H(H1, dist), lambda_H(H2, dist)
    val = l1 if H1 == H2 else 0 * l1
    corr = (
        (c - 1) / c * H1.e * H2.e
        - 1
        + chi / c * ((c - 1) * H1.v + 1) * ((c - 1) * H2.v + 1)
    )
    return val + l1 * l2 * corr


# --- report ----------------------------------------------------------------------------


@dataclass
class AsymptoticReport:
    lam: dict
    sigma: dict
    poisson_rates: tuple
    zeta: object
    f_zeta: object | None = None
    giant_mean: object | None = None
    giant_var: object | None = None
    chi_limit: object | None = None
    ee_edges: object | None = None
    degenerate: bool = False

    def to_json(self) -> dict:
        def show(x):
            if x is None:
                return None
            if isinstance(x, Fraction):
                return {"value": float(x), "exact": str(x)}
            return {"value": float(x)}

        out = {
            "degenerate": self.degenerate,
            "zeta": show(self.zeta),
            "lambda": {k: show(v) for k, v in self.lam.items()},
            "sigma": {f"{a}|{b}": show(v) for (a, b), v in self.sigma.items()},
            "poisson_rates": {"loops": show(self.poisson_rates[0]), "double_edges": show(self.poisson_rates[1])}
            if self.poisson_rates
            else None,
        }
        if self.giant_mean is not None:
            out.update(
                f_zeta=show(self.f_zeta),
                giant_mean=show(self.giant_mean),
                giant_var=show(self.giant_var),
                chi_limit=show(self.chi_limit),
                ee_edges=show(self.ee_edges),
            )
        return out


def asymptotic_report(dist: DegreeDistribution, graphs: dict[str, CanonGraph]) -> AsymptoticReport:
    if dist.mu == 0:
        return AsymptoticReport({}, {}, (), None, degenerate=True)
    from .gw import ee_closed_size_edges

    spec = make_spec(dist)
    lam = {name: lambda_H(H, dist) for name, H in graphs.items() if H.e <= H.v}
    trees = {name: H for name, H in graphs.items() if H.is_tree}
    sigma = {(a, b): sigma_pair(trees[a], trees[b], dist) for a in trees for b in trees}
    rep = AsymptoticReport(lam, sigma, poisson_rates(dist), spec.zeta)
    if dist.moment(2) - 2 * dist.mu > 0:
        rep.giant_mean, rep.giant_var = giant_mean_var(dist, spec)
        rep.f_zeta = 1 - rep.giant_mean
        rep.chi_limit, rep.ee_edges = ee_closed_size_edges(spec)
    return rep
