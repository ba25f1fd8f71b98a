from fractions import Fraction

import mpmath
import numpy as np
import pytest

from cmgraphs.census import named_graph
from cmgraphs.degrees import DegreeDistribution, DegreeSequence, from_pmf_rounded, poisson
from cmgraphs.gw import enumerate_trees, make_spec, unrooted_tree_prob
from cmgraphs import formulas as fm

K2, K13, P3 = named_graph("K2"), named_graph("K13"), named_graph("P3")


def test_lambda_examples(d13, d12):
    assert fm.lambda_H(K2, d13) == Fraction(1, 16)
    assert fm.lambda_H(K13, d13) == Fraction(1, 128)
    assert fm.lambda_H(named_graph("loop"), d12) == Fraction(1, 3)
    assert fm.lambda_H(P3, d13) == 0


def test_sigma_examples(d13):
    assert fm.sigma_pair(K2, K2, d13) == Fraction(9, 256)
    assert fm.sigma_pair(P3, K2, d13) == 0
    # 2*1*3/2 - (n_1(K2) n_1(K13)) / p_1 = 3 - 2*3*2 = -9
    assert fm.sigma_pair(K2, K13, d13) == Fraction(1, 16) * Fraction(1, 128) * -9


def test_poisson_rates(d13, d12):
    assert fm.poisson_rates(d12) == (Fraction(1, 3), Fraction(1, 9))
    assert fm.poisson_rates(d13) == (Fraction(3, 4), Fraction(9, 16))
    assert fm.poisson_rates(DegreeDistribution({1: 1})) == (0, 0)


def test_exact_mean_examples():
    assert fm.exact_mean_isolated(K2, DegreeSequence((1, 1, 1, 1))) == 4
    assert fm.exact_mean_isolated(K2, DegreeSequence((1, 1, 1, 1)), unlabelled=True) == 2
    assert fm.exact_mean_isolated(K2, DegreeSequence((2, 2))) == 0
    assert fm.exact_mean_isolated(P3, DegreeSequence((2, 1, 1))) == Fraction(4, 3)
    assert fm.exact_mean_isolated(P3, DegreeSequence((2, 1, 1)), unlabelled=True) == Fraction(2, 3)


def test_exact_cov_degenerate():
    assert fm.exact_cov_isolated(K2, K2, DegreeSequence((1, 1, 1, 1))) == 0
    assert fm.exact_cov_isolated(P3, K2, DegreeSequence((1, 1, 3, 3))) == 0


def test_exact_moments_converge(d13):
    errs = []
    for n in (1000, 10000, 100000):
        seq = from_pmf_rounded(d13, n)
        mean = fm.exact_mean_isolated(K2, seq, unlabelled=True) / n
        cov = fm.exact_cov_isolated(K2, K2, seq) / n
        assert abs(mean / Fraction(1, 16) - 1) < 0.01
        errs.append(abs(float(cov) - 9 / 256))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.01 * 9 / 256


def test_giant(d13, d12):
    mean, var = fm.giant_mean_var(d13)
    assert (mean, var) == (Fraction(22, 27), Fraction(214, 729))
    with pytest.raises(fm.NotSupercritical):
        fm.giant_mean_var(d12)


def test_giant_near_critical_sweep():
    # p_1 = 1 - q, p_3 = q is supercritical iff q > 1/4; the giant shrinks as q falls to 1/4
    means = [fm.giant_mean_var(DegreeDistribution({1: 1 - q, 3: q}))[0] for q in
             (Fraction(1, 2), Fraction(1, 3), Fraction(3, 10), Fraction(26, 100), Fraction(251, 1000))]
    assert all(a > b for a, b in zip(means, means[1:]))
    assert means[-1] < 0.02


def test_giant_variance_positive_for_poisson():
    mean, var = fm.giant_mean_var(poisson(2))
    assert 0 < mean < 1 and var > 0


def test_lambda_tree_bridge():
    for d in (DegreeDistribution({1: 0.2, 2: 0.3, 3: 0.5}), DegreeDistribution({0: 0.1, 1: 0.4, 4: 0.5})):
        spec = make_spec(d)
        for T, p in enumerate_trees(spec, 8):
            assert T.v * fm.lambda_H(T, d) == unrooted_tree_prob(T, spec)


def test_sigma_psd_and_positivity():
    d = DegreeDistribution({1: Fraction(2, 5), 2: Fraction(1, 5), 3: Fraction(2, 5)})
    trees = [T for T, _ in enumerate_trees(make_spec(d), 4) if T.v > 1]
    S = np.array([[float(x) for x in row] for row in fm.sigma_matrix(trees, d)])
    assert np.allclose(S, S.T)
    assert np.linalg.eigvalsh(S).min() > -1e-10
    assert np.linalg.det(S) > 0
    for T in trees:
        assert (fm.sigma_pair(T, T, d) > 0) == (fm.lambda_H(T, d) > 0)


def test_sigma_psi_cross_path(d13):
    _, var = fm.giant_mean_var(d13)
    res = fm.sigma_psi(lambda T: 1, d13, L=40, histogram=True)
    assert abs(float(res.value - var)) <= 1e-4 * float(var) + res.tail
    small = fm.sigma_psi(lambda T: 1, d13, L=16)
    assert abs(float(small.value - var)) <= 1e-4 * float(var) + small.tail


def test_sigma_psi_degenerate_functionals():
    d = DegreeDistribution({0: Fraction(1, 5), 1: Fraction(2, 5), 3: Fraction(2, 5)})
    iso = fm.sigma_psi(lambda T: 1 if T.v == 1 else 0, d, L=10)
    assert iso.value == 0
    none = fm.sigma_psi(lambda T: 1 if T.v == 3 else 0, d, L=10)  # no P3 is supported
    assert none.value == 0


def test_sigma_bar_iid(d13):
    assert fm.sigma_bar_iid(K2, K2, d13) == Fraction(61, 1024)
    q = DegreeDistribution({1: Fraction(3, 4), 3: Fraction(1, 4)})  # E D(D-2) = 0
    lam = fm.lambda_H(K2, q)
    assert fm.sigma_bar_iid(K2, K2, q) == lam - lam**2
    assert fm.sigma_bar_iid(P3, K2, d13) == 0


def test_general_kernel_identities(d13):
    pairs = [(K2, K2), (K2, K13), (K13, K13)]
    for a, b in pairs:
        assert fm.sigma_bar_general(a, b, d13, fm.iid_kernel(d13)) == fm.sigma_bar_iid(a, b, d13)
        assert fm.sigma_bar_general(a, b, d13, {}) == fm.sigma_pair(a, b, d13)
        assert fm.sigma_bar_general(a, b, d13, lambda k, l: 0) == fm.sigma_pair(a, b, d13)


@pytest.mark.parametrize("chi", [1, -1])
def test_erdos_renyi_closed_form(chi):
    c = mpmath.mpf(2)
    d = poisson(c, tol=1e-40)
    gamma = fm.erdos_renyi_kernel(d, c, chi)
    for a, b in [(K2, K2), (K2, K13), (P3, K13), (named_graph("K1"), K2)]:
        lhs = fm.sigma_bar_general(a, b, d, gamma)
        rhs = fm.sigma_bar_erdos_renyi(a, b, d, c, chi)
        assert abs(lhs - rhs) < 1e-12


def test_report(d13, d12):
    graphs = {n: named_graph(n) for n in ("K2", "K13", "loop")}
    rep = fm.asymptotic_report(d13, graphs)
    js = rep.to_json()
    assert js["giant_var"]["exact"] == "214/729"
    assert js["chi_limit"]["exact"] == "17/27"
    assert js["sigma"]["K2|K2"]["exact"] == "9/256"
    assert "giant_mean" not in fm.asymptotic_report(d12, graphs).to_json()
    assert fm.asymptotic_report(DegreeDistribution({0: 1}), graphs).degenerate
