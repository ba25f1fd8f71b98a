import json
import math

import numpy as np
import pytest
from scipy import stats as sps

from cmgraphs import cumulants as cu
from cmgraphs import formulas as fm
from cmgraphs.degrees import DegreeSequence
from cmgraphs.stats import (
    ExperimentPlan,
    cross_covariance,
    extractor,
    factorial_moment,
    kstats,
    mixed_factorial_moment,
    normality_diagnostic,
    poisson_diagnostic,
    run,
    summarize,
)


def test_fixed_sequence_run():
    rep = run(ExperimentPlan(["Z:K2"], R=4, seq=DegreeSequence((1, 1, 1, 1))))
    assert rep.column("Z:K2").tolist() == [2, 2, 2, 2]
    assert rep.summary("Z:K2").var == 0


def test_simple_failures_counted():
    rep = run(ExperimentPlan(["c1"], R=3, seq=DegreeSequence((2,)), simple_only=True, max_tries=5))
    assert rep.failures == 3 and not rep.passed


def test_plan_validation(d13):
    with pytest.raises(ValueError):
        ExperimentPlan(["c1"], R=1, dist=d13, n=10)
    with pytest.raises(ValueError):
        ExperimentPlan([], R=5, dist=d13, n=10)
    with pytest.raises(KeyError):
        ExperimentPlan(["nope"], R=5, dist=d13, n=10)
    with pytest.raises(ValueError):
        ExperimentPlan(["c1"], R=5, dist=d13)


def test_determinism_across_workers(d13):
    kw = dict(statistics=["Z:K2", "c1", "loops", "psi:tree"], R=6, seed=3, dist=d13, n=2000, iid=True)
    a = run(ExperimentPlan(**kw))
    b = run(ExperimentPlan(**kw, workers=2))
    c = run(ExperimentPlan(**kw))
    assert json.dumps(a.to_json()) == json.dumps(b.to_json()) == json.dumps(c.to_json())


def test_extractors_agree(d13):
    rep = run(ExperimentPlan(["psi:one", "c1", "copies:K2", "loops", "c2"], R=3, seed=1, dist=d13, n=3000))
    assert np.all(rep.column("psi:one") == 3000 - rep.column("c1"))
    assert np.all(rep.column("copies:K2") == 3000 - rep.column("loops"))  # N/2 = 3000
    assert np.all(rep.column("c2") <= rep.column("c1"))
    with pytest.raises(KeyError):
        extractor("psi:unknown")


def test_kstats_are_unbiased_cumulants():
    rng = np.random.default_rng(0)
    x = rng.integers(0, 5, 12).astype(float)
    k2, k3, k4 = kstats(x)
    assert k2 == pytest.approx(x.var(ddof=1))
    s = summarize(x)
    assert s.g1 == pytest.approx(k3 / k2**1.5) and s.g2 == pytest.approx(k4 / k2**2)
    # k-statistics are unbiased: averaging over all samples of size 4 drawn with replacement
    # from a small population recovers the population cumulants from the partition formula
    pop = np.array([0.0, 1.0, 3.0])
    import itertools
    from fractions import Fraction

    draws = list(itertools.product(pop, repeat=4))
    mean_k3 = np.mean([sps.kstat(np.array(d), 3) for d in draws])
    m = {r: Fraction(int(sum(p**r for p in pop)), 3) for r in (1, 2, 3)}
    kappa3 = cu.mixed_cumulant(lambda s: m[len(s)], 3)
    assert mean_k3 == pytest.approx(float(kappa3))


def test_normality_calibration():
    rng = np.random.default_rng(2)
    assert normality_diagnostic(rng.standard_normal(10_000)).passed
    v = normality_diagnostic(rng.exponential(size=10_000))
    assert v.label == "fail" and v.details["g1"] > 1.5
    assert normality_diagnostic(np.ones(200)).label == "degenerate"
    with pytest.raises(ValueError):
        normality_diagnostic(np.zeros(50))


def test_poisson_calibration():
    rng = np.random.default_rng(3)
    assert poisson_diagnostic(rng.poisson(0.5, 2000), 0.5).passed
    assert poisson_diagnostic(rng.poisson(4.0, 2000), 4.0).passed
    assert not poisson_diagnostic(np.zeros(500, dtype=int), 1.0).passed
    assert poisson_diagnostic(np.zeros(500, dtype=int), 0.0).passed
    assert not poisson_diagnostic(rng.poisson(1.0, 2000), 0.5).passed


def test_cross_covariance():
    rng = np.random.default_rng(4)
    a, b = rng.standard_normal(2000), rng.standard_normal(2000)
    same = cross_covariance(a, a)
    assert same.value == pytest.approx(a.var(ddof=1))
    ind = cross_covariance(a, b)
    assert abs(ind.value) < 3 * ind.se
    assert ind.se == pytest.approx(1 / math.sqrt(2000), rel=0.1)
    with pytest.raises(ValueError):
        cross_covariance(a, b[:-1])


def test_tree_cross_covariance(d13):
    rep = run(ExperimentPlan(["Z:K2", "Z:K13"], R=200, seed=5, dist=d13, n=20_000))
    est = cross_covariance(rep.column("Z:K2"), rep.column("Z:K13"))
    target = float(fm.sigma_pair(fm_named("K2"), fm_named("K13"), d13)) * 20_000
    assert abs(est.value - target) < 3 * est.se


def fm_named(name):
    from cmgraphs.census import named_graph

    return named_graph(name)


def test_poisson_factorial_moments(d12):
    rep = run(ExperimentPlan(["loops", "parallel", "Z:double"], R=2000, seed=6, dist=d12, n=2000))
    l1, l2 = (float(x) for x in fm.poisson_rates(d12))
    loops, par = rep.column("loops"), rep.column("parallel")
    for x, lam in ((loops, l1), (par, l2)):
        f2, se = factorial_moment(x, 2)
        assert abs(f2 - lam**2) < 3 * se + 1e-12
    joint, se = mixed_factorial_moment(loops, par)
    assert abs(joint - l1 * l2) < 3 * se
    # with degrees 1 and 2 every double edge is an isolated 2-cycle component
    assert np.all(par == rep.column("Z:double"))


def test_component_size_tail_decays(d13):
    from cmgraphs.census import ComponentIndex
    from cmgraphs.confmodel import sample_multigraph
    from cmgraphs.degrees import from_pmf_rounded

    rng = np.random.default_rng(8)
    seq = from_pmf_rounded(d13, 100_000)
    counts = np.zeros(31)
    for _ in range(5):
        idx = ComponentIndex(sample_multigraph(seq, rng))
        sizes = idx.sizes[idx.sizes <= 30]
        counts += np.bincount(sizes, weights=sizes, minlength=31)[:31]
    ks = np.array([k for k in range(2, 31) if counts[k] > 0])
    slope = np.polyfit(ks, np.log(counts[ks]), 1)[0]
    assert slope < 0


def test_report_outputs(d13):
    rep = run(ExperimentPlan(["Z:K2", "c1"], R=5, seed=2, dist=d13, n=1000))
    rep.compare("Z:K2 mean", 1.0, 1.0, 0.1)
    rep.compare("c1 mean", 1.0, 3.0, 0.1)
    js = rep.to_json()
    assert js["replications"] == 5 and not js["passed"]
    cov = np.array(js["covariance"])
    assert np.allclose(cov, cov.T)
    lines = rep.to_csv().strip().splitlines()
    assert lines[0].startswith("statistic,") and len(lines) == 3
