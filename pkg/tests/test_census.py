import itertools
import math
from collections import defaultdict

import numpy as np
import pytest

from cmgraphs.census import (
    CapExceeded,
    ComponentIndex,
    LargeComponent,
    canonical_code,
    census,
    count_class,
    count_copies,
    cycle,
    named_graph,
    path,
    psi_functional,
    star,
)
from cmgraphs.confmodel import Multigraph, loop_and_parallel_counts, sample_multigraph
from cmgraphs.degrees import DegreeSequence


def brute_form(v, edges):
    """Lexicographically least relabelled edge multiset over all vertex permutations."""
    best = None
    for perm in itertools.permutations(range(v)):
        form = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges))
        if best is None or form < best:
            best = form
    return best


def brute_aut(v, edges):
    """Half-edge automorphisms: vertex permutation plus a bijection of half-edges at each vertex."""
    halves = defaultdict(list)
    pairs = []
    hid = 0
    for a, b in edges:
        halves[a].append(hid)
        halves[b].append(hid + 1)
        pairs.append(frozenset((hid, hid + 1)))
        hid += 2
    matching = set(pairs)
    deg = [len(halves[x]) for x in range(v)]
    total = 0
    for sigma in itertools.permutations(range(v)):
        if any(deg[x] != deg[sigma[x]] for x in range(v)):
            continue
        choices = [itertools.permutations(halves[sigma[x]]) for x in range(v)]
        for images in itertools.product(*choices):
            phi = {}
            for x in range(v):
                phi.update(zip(halves[x], images[x]))
            if all(frozenset(phi[h] for h in p) in matching for p in pairs):
                total += 1
    return total


def connected(v, edges):
    seen, stack = {0}, [0]
    adj = defaultdict(set)
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    while stack:
        x = stack.pop()
        for y in adj[x] - seen:
            seen.add(y)
            stack.append(y)
    return len(seen) == v


def all_connected_multigraphs(v, e):
    slots = [(a, b) for a in range(v) for b in range(a, v)]
    for combo in itertools.combinations_with_replacement(slots, e):
        if connected(v, combo):
            yield combo


SMALL = [(1, 0), (1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2), (3, 3), (3, 4), (4, 3), (4, 4), (4, 5), (5, 4), (5, 5)]


@pytest.mark.parametrize("v,e", SMALL)
def test_codes_separate_isomorphism_classes(v, e):
    by_code, by_form = {}, {}
    for edges in all_connected_multigraphs(v, e):
        code = canonical_code((v, list(edges))).code
        form = brute_form(v, edges)
        assert by_code.setdefault(code, form) == form, "two classes share a code"
        assert by_form.setdefault(form, code) == code, "one class got two codes"


@pytest.mark.parametrize("v,e", [(1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2), (3, 3), (3, 4), (4, 3), (4, 4), (5, 4)])
def test_aut_matches_half_edge_brute_force(v, e):
    done = set()
    for edges in all_connected_multigraphs(v, e):
        form = brute_form(v, edges)
        if form in done:
            continue
        done.add(form)
        cg = canonical_code((v, list(edges)))
        assert cg.aut == brute_aut(v, edges), edges


@pytest.mark.parametrize(
    "name,aut",
    [("K1", 1), ("K2", 2), ("P3", 2), ("K13", 6), ("loop", 2), ("double", 4), ("C3", 6), ("C4", 8), ("P4", 2)],
)
def test_named_graph_auts(name, aut):
    assert named_graph(name).aut == aut


def test_named_graph_aliases():
    assert star(3) == named_graph("K1,3") == named_graph("star:3")
    assert path(4) == named_graph("path:4") == named_graph("P4")
    assert cycle(5) == named_graph("cycle:5")
    with pytest.raises(ValueError):
        named_graph("banana")


def test_class_fields():
    T = named_graph("K13")
    assert (T.v, T.e, T.kind, T.nk) == (4, 3, "tree", {1: 3, 3: 1})
    assert named_graph("loop").kind != "tree"


def test_cap():
    with pytest.raises(CapExceeded):
        canonical_code(path(10), cap=5)


def hand_graph():
    # components: triangle+pendant (4 v, 4 e), K2, K2, K1, isolated loop, path of 3
    edges = [(0, 1), (1, 2), (2, 0), (2, 3), (4, 5), (6, 7), (9, 9), (10, 11), (11, 12)]
    return Multigraph.from_edges(13, edges)


def test_component_index_ranking():
    idx = ComponentIndex(hand_graph())
    assert idx.count == 6
    order = idx.ranking()
    assert idx.sizes[order[0]] == 4 and idx.sizes[order[1]] == 3
    assert sorted(idx.sizes.tolist()) == [1, 1, 2, 2, 3, 4]


def test_census_counts():
    G = hand_graph()
    cen = census(G)
    assert cen.count(named_graph("K2")) == 2
    assert cen.count(named_graph("K1")) == 1
    assert cen.count(named_graph("loop")) == 1
    assert cen.count(named_graph("P3")) == 1
    assert (cen.c1, cen.c2, cen.kappa) == (4, 3, 6)
    assert cen.chi_hat == pytest.approx((9 + 4 + 4 + 1 + 1) / 13)
    for H in ("K2", "K1", "loop", "P3", "C3"):
        assert count_class(G, named_graph(H)) == cen.count(named_graph(H))
    assert len(cen.to_json()["classes"]) == 5


def test_large_components_and_functional():
    G = Multigraph.from_edges(12, [(i, i + 1) for i in range(9)] + [(10, 11)])
    cen = census(G, cap=4)
    assert cen.large == [(10, 9)]
    assert psi_functional(cen, lambda C: 1) == 2
    assert psi_functional(cen, lambda C: 1, exclude_largest=False) == 12
    assert psi_functional(cen, lambda C: 1 if isinstance(C, LargeComponent) else 0, exclude_largest=False) == 10


def test_count_copies_small():
    assert count_copies(named_graph("K13"), Multigraph.from_edges(5, star(4).edges)) == 4
    C5 = Multigraph.from_edges(5, cycle(5).edges)
    assert count_copies(named_graph("P4"), C5) == 5
    assert count_copies(named_graph("K2"), Multigraph.from_edges(2, [(0, 1), (0, 1)])) == 2
    with pytest.raises(ValueError):
        count_copies(named_graph("C3"), C5)


def test_multigraph_copy_identities():
    rng = np.random.default_rng(1)
    seq = DegreeSequence(tuple(rng.integers(0, 5, 300).tolist()) + (0,))
    if seq.N % 2:
        seq = DegreeSequence(seq.degrees[:-1] + (1,))
    for _ in range(5):
        G = sample_multigraph(seq, rng)
        loops, par = loop_and_parallel_counts(G)
        loop_at = np.bincount(G.edges[G.edges[:, 0] == G.edges[:, 1], 0], minlength=G.n)
        eff = G.degrees - 2 * loop_at
        assert count_copies(named_graph("K2"), G) == seq.N // 2 - loops
        assert count_copies(named_graph("K12"), G) == int((eff * (eff - 1) // 2).sum()) - 2 * par
