import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from cmgraphs.confmodel import (
    Multigraph,
    TriesExhausted,
    enumerate_matchings,
    is_simple,
    loop_and_parallel_counts,
    sample_matching,
    sample_multigraph,
    sample_simple,
    sample_via_cuffs,
)
from cmgraphs.degrees import DegreeSequence, ParityViolation


def test_multigraph_normalizes_edges():
    G = Multigraph.from_edges(3, [(2, 0), (1, 1)])
    assert G.edge_list() == [(0, 2), (1, 1)]
    assert list(G.degrees) == [1, 2, 1]
    assert G == Multigraph.from_edges(3, [(1, 1), (0, 2)])
    assert len({G, Multigraph.from_edges(3, [(1, 1), (0, 2)])}) == 1


def test_loop_and_parallel_counts():
    G = Multigraph.from_edges(3, [(0, 1), (0, 1), (0, 1), (2, 2), (1, 2)])
    assert loop_and_parallel_counts(G) == (1, 3)
    assert not is_simple(G)
    assert is_simple(Multigraph.from_edges(3, [(0, 1), (1, 2)]))


def test_odd_total_rejected():
    with pytest.raises(ParityViolation):
        sample_multigraph(DegreeSequence((1, 2)), np.random.default_rng(0))
    with pytest.raises(ParityViolation):
        sample_matching(3, np.random.default_rng(0))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=30), st.integers(0, 2**32 - 1))
def test_samplers_preserve_degrees(degrees, seed):
    if sum(degrees) % 2:
        degrees[0] += 1
    seq = DegreeSequence(tuple(degrees))
    rng = np.random.default_rng(seed)
    for sampler in (sample_multigraph, sample_via_cuffs):
        G = sampler(seq, rng)
        assert list(G.degrees) == list(degrees)
        assert G.m == seq.N // 2


def test_enumeration_size():
    seq = DegreeSequence((3, 1, 2, 2))
    assert len(enumerate_matchings(seq)) == math.prod(range(1, seq.N, 2))
    with pytest.raises(ValueError):
        enumerate_matchings(DegreeSequence((7, 7)))


@pytest.mark.parametrize("sampler", [sample_multigraph, sample_via_cuffs])
def test_sampler_matches_enumerated_law(sampler):
    seq = DegreeSequence((3, 1, 2, 2))
    law = Counter(G.canonical_edges() for _, G in enumerate_matchings(seq))
    total = sum(law.values())
    rng = np.random.default_rng(12)
    draws = 30000
    seen = Counter(sampler(seq, rng).canonical_edges() for _ in range(draws))
    assert set(seen) <= set(law)
    keys = sorted(law)
    obs = [seen[k] for k in keys]
    exp = [draws * law[k] / total for k in keys]
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_simple_rejection():
    G, attempts = sample_simple(DegreeSequence((1, 1)), np.random.default_rng(0))
    assert attempts == 1 and G.edge_list() == [(0, 1)]
    with pytest.raises(TriesExhausted) as err:
        sample_simple(DegreeSequence((2,)), np.random.default_rng(0), max_tries=20)
    assert err.value.attempts == 20


def test_simple_law_is_uniform():
    # d=(2,2,2,1,1): simple outcomes are the labelled paths/triangle+edge; all simple
    # matchings are equally likely, so each simple labelled graph gets equal weight
    seq = DegreeSequence((2, 2, 2, 1, 1))
    simple = Counter(G.canonical_edges() for _, G in enumerate_matchings(seq) if is_simple(G))
    rng = np.random.default_rng(5)
    draws = 6000
    seen = Counter(sample_simple(seq, rng)[0].canonical_edges() for _ in range(draws))
    keys = sorted(simple)
    assert set(seen) == set(keys)
    weight = sum(simple.values())
    exp = [draws * simple[k] / weight for k in keys]
    assert stats.chisquare([seen[k] for k in keys], exp).pvalue > 1e-3
